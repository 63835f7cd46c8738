"""Query model: parse, canonicalize, render, features, diff, similarity."""
from .canon import PARAM, canonicalize, const_sort_key, literal_value, template
from .diff import (
    ADD_GROUP_BY,
    ADD_PREDICATE,
    ADD_PROJECTION,
    ADD_RELATION,
    CHANGE_CONSTANT,
    OTHER,
    REMOVE_GROUP_BY,
    REMOVE_PREDICATE,
    REMOVE_PROJECTION,
    REMOVE_RELATION,
    Edit,
    apply_script,
    diff,
    diff_features,
    reverse_script,
    script_from_json,
    script_labels,
    script_to_json,
)
from .features import (
    EMPTY_FEATURES,
    UNRESOLVED,
    FeatureSet,
    SimilarityWeights,
    extract_features,
    jaccard,
    similarity,
)
from .lex import Token, tokenize
from .nodes import (
    AGGREGATE,
    COLUMN_REF,
    COMPARISON,
    FROM_LIST,
    GROUP_BY,
    HAVING,
    KINDS,
    LITERAL,
    LOGICAL_OP,
    ORDER_BY,
    PLACEHOLDER,
    SELECT_LIST,
    STAR,
    STATEMENT,
    SUBQUERY,
    TABLE_REF,
    WHERE_CLAUSE,
    Node,
    render,
)
from .parser import parse

__all__ = [
    "parse",
    "canonicalize",
    "template",
    "render",
    "extract_features",
    "similarity",
    "jaccard",
    "diff",
    "diff_features",
    "apply_script",
    "reverse_script",
    "FeatureSet",
    "SimilarityWeights",
    "Node",
    "Edit",
]
