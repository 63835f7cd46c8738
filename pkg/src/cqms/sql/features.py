"""Feature extraction over canonical trees, and feature-set similarity.

A FeatureSet is the searchable surface of one query: which relations it
reads, which attributes it touches and in what role, its WHERE predicates
with constants, equated relation pairs, aggregates, and whether a subquery
appears. Attribute relations are resolved through a schema snapshot when one
is given; an attribute whose owning relation cannot be pinned down resolves
to "?".
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import InvalidWeights
from .canon import PARAM, const_sort_key, literal_value
from .nodes import (
    AGGREGATE,
    COLUMN_REF,
    COMPARISON,
    FROM_LIST,
    GROUP_BY,
    HAVING,
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
)

UNRESOLVED = "?"

ROLES = ("select", "where", "groupby", "orderby", "having")


@dataclass(frozen=True, slots=True)
class FeatureSet:
    """Searchable features of one query.

    attributes hold (attr, relation, role) triples; predicates hold
    (attr, relation, op, const) with const a typed literal, a tuple for
    IN/BETWEEN, or None for a parameter marker. comparison_attrs list the
    columns compared to non-constants (join columns, subquery comparisons);
    together with predicate columns they induce the where-role attributes.
    """

    data_sources: frozenset = frozenset()
    attributes: frozenset = frozenset()
    predicates: frozenset = frozenset()
    join_pairs: frozenset = frozenset()
    aggregates: frozenset = frozenset()
    comparison_attrs: frozenset = frozenset()
    has_subquery: bool = False

    def is_empty(self) -> bool:
        return not (
            self.data_sources
            or self.attributes
            or self.predicates
            or self.join_pairs
            or self.aggregates
            or self.has_subquery
        )

    def predicate_templates(self) -> frozenset:
        return frozenset((a, r, op) for (a, r, op, _c) in self.predicates)

    def items(self) -> frozenset:
        """Tagged feature items used by mining and suggestion models."""
        out = set()
        for r in self.data_sources:
            out.add("src:%s" % r)
        for a, r, _role in self.attributes:
            out.add("attr:%s@%s" % (a, r))
        for a, r, op in self.predicate_templates():
            out.add("pred:%s@%s %s" % (a, r, op))
        return frozenset(out)

    def to_json(self) -> dict:
        return {
            "data_sources": sorted(self.data_sources),
            "attributes": [list(t) for t in sorted(self.attributes)],
            "predicates": [
                [a, r, op, _const_to_json(c)]
                for a, r, op, c in sorted(self.predicates, key=_pred_key)
            ],
            "join_pairs": sorted(sorted(p) for p in self.join_pairs),
            "aggregates": [list(t) for t in sorted(self.aggregates)],
            "comparison_attrs": [list(t) for t in sorted(self.comparison_attrs)],
            "has_subquery": self.has_subquery,
        }

    @classmethod
    def from_json(cls, body: dict) -> "FeatureSet":
        return cls(
            data_sources=frozenset(body.get("data_sources", ())),
            attributes=frozenset(tuple(t) for t in body.get("attributes", ())),
            predicates=frozenset(
                (a, r, op, _const_from_json(c))
                for a, r, op, c in body.get("predicates", ())
            ),
            join_pairs=frozenset(frozenset(p) for p in body.get("join_pairs", ())),
            aggregates=frozenset(tuple(t) for t in body.get("aggregates", ())),
            comparison_attrs=frozenset(tuple(t) for t in body.get("comparison_attrs", ())),
            has_subquery=bool(body.get("has_subquery", False)),
        )


def _pred_key(p):
    a, r, op, c = p
    return (a, r, op, const_sort_key(c))


def _const_to_json(c):
    if c is PARAM:
        return {"param": True}
    if isinstance(c, tuple):
        return [_const_to_json(v) for v in c]
    return c


def _const_from_json(c):
    if isinstance(c, dict):
        return PARAM
    if isinstance(c, list):
        return tuple(_const_from_json(v) for v in c)
    return c


EMPTY_FEATURES = FeatureSet()


class _Collector:
    def __init__(self, schema):
        self.schema = schema or {}
        self.sources: set[str] = set()
        self.attrs: set[tuple] = set()
        self.preds: set[tuple] = set()
        self.joins: set[frozenset] = set()
        self.aggs: set[tuple] = set()
        self.comparison_attrs: set[tuple] = set()
        self.has_subquery = False

    def resolve(self, node: Node) -> str:
        if node.qualifier:
            q = node.qualifier
            return q if q in self.sources else UNRESOLVED
        name = node.text or ""
        owners = [r for r in self.sources if name in self.schema.get(r, ())]
        if len(owners) == 1:
            return owners[0]
        return UNRESOLVED

    def collect_sources(self, stmt: Node):
        for kid in stmt.children:
            if kid.kind == FROM_LIST:
                for ref in kid.children:
                    if ref.kind == TABLE_REF and ref.text:
                        self.sources.add(ref.text)
            for sub in kid.walk():
                if sub.kind == SUBQUERY and sub.children and sub.children[0].kind == STATEMENT:
                    self.collect_sources(sub.children[0])

    def visit_statement(self, stmt: Node):
        for kid in stmt.children:
            k = kid.kind
            if k == SELECT_LIST:
                for item in kid.children:
                    self.operand_attrs(item, "select")
            elif k == WHERE_CLAUSE:
                if kid.children:
                    self.condition(kid.children[0], in_where=True)
            elif k == GROUP_BY:
                for col in kid.children:
                    self.operand_attrs(col, "groupby")
            elif k == HAVING:
                if kid.children:
                    self.condition(kid.children[0], in_where=False)
            elif k == ORDER_BY:
                for key in kid.children:
                    self.operand_attrs(key, "orderby")

    def operand_attrs(self, node: Node, role: str):
        k = node.kind
        if k == COLUMN_REF and node.text:
            self.attrs.add((node.text, self.resolve(node), role))
        elif k == AGGREGATE:
            arg = node.children[0] if node.children else None
            arg_name = "*"
            if arg is not None and arg.kind == COLUMN_REF and arg.text:
                arg_name = arg.text
                self.attrs.add((arg.text, self.resolve(arg), role))
            self.aggs.add((node.text or "", arg_name))
        elif k == SUBQUERY:
            self.subquery(node)

    def condition(self, node: Node, in_where: bool):
        k = node.kind
        if k == LOGICAL_OP:
            for kid in node.children:
                self.condition(kid, in_where)
        elif k == COMPARISON:
            self.comparison(node, in_where)

    def comparison(self, node: Node, in_where: bool):
        op = node.text
        if op is None:
            return  # incomplete tail: contributes nothing
        if op == "exists":
            if node.children and node.children[0].kind == SUBQUERY:
                self.subquery(node.children[0])
            return
        kids = node.children
        for side in kids:
            if side.kind == SUBQUERY:
                self.subquery(side)
            elif side.kind == AGGREGATE:
                if in_where:
                    # aggregate operand in WHERE: record it, its column is
                    # compared to a non-constant
                    arg = side.children[0] if side.children else None
                    arg_name = "*"
                    if arg is not None and arg.kind == COLUMN_REF and arg.text:
                        arg_name = arg.text
                        self.comparison_attrs.add((arg.text, self.resolve(arg)))
                    self.aggs.add((side.text or "", arg_name))
                else:
                    self.operand_attrs(side, "having")
        cols = [c for c in kids if c.kind == COLUMN_REF and c.text]
        if not in_where:
            for col in cols:
                self.attrs.add((col.text, self.resolve(col), "having"))
            return
        lhs = kids[0]
        if lhs.kind == COLUMN_REF and lhs.text:
            lrel = self.resolve(lhs)
            if op == "in":
                rest = kids[1:]
                if len(rest) == 1 and rest[0].kind == SUBQUERY:
                    self.comparison_attrs.add((lhs.text, lrel))
                    return
                values = tuple(
                    sorted((_value_of(v) for v in rest if _is_value(v)), key=const_sort_key)
                )
                self.preds.add((lhs.text, lrel, "in", values))
                return
            if op == "between":
                lo = _value_of(kids[1]) if len(kids) > 1 and _is_value(kids[1]) else PARAM
                hi = _value_of(kids[2]) if len(kids) > 2 and _is_value(kids[2]) else PARAM
                self.preds.add((lhs.text, lrel, "between", (lo, hi)))
                for c in kids[1:]:
                    if c.kind == COLUMN_REF and c.text:
                        self.comparison_attrs.add((c.text, self.resolve(c)))
                return
            rhs = kids[1] if len(kids) > 1 else None
            if rhs is None:
                return
            if _is_value(rhs):
                self.preds.add((lhs.text, lrel, op, _value_of(rhs)))
                return
            if rhs.kind == COLUMN_REF and rhs.text:
                rrel = self.resolve(rhs)
                self.comparison_attrs.add((lhs.text, lrel))
                self.comparison_attrs.add((rhs.text, rrel))
                if op == "=" and UNRESOLVED not in (lrel, rrel) and lrel != rrel:
                    self.joins.add(frozenset((lrel, rrel)))
                return
            self.comparison_attrs.add((lhs.text, lrel))
            return
        # left side is not a column: any column operand faces a non-constant
        for col in cols:
            self.comparison_attrs.add((col.text, self.resolve(col)))

    def subquery(self, node: Node):
        self.has_subquery = True
        if node.children and node.children[0].kind == STATEMENT:
            self.visit_statement(node.children[0])


def _is_value(node: Node) -> bool:
    return node.kind == LITERAL or (node.kind == PLACEHOLDER and node.text == "?")


def _value_of(node: Node):
    if node.kind == PLACEHOLDER:
        return PARAM
    return literal_value(node.text or "0")


def extract_features(tree: Node, schema=None) -> FeatureSet:
    """Features of a canonical Statement tree.

    schema maps relation name to a collection of attribute names; when given,
    unqualified attributes resolve to the unique owning relation among the
    query's data sources, otherwise to "?".
    """
    col = _Collector(schema)
    col.collect_sources(tree)
    col.visit_statement(tree)
    # where-role attributes are induced by predicates and comparisons
    for a, r, _op, _c in col.preds:
        col.attrs.add((a, r, "where"))
    for a, r in col.comparison_attrs:
        col.attrs.add((a, r, "where"))
    return FeatureSet(
        data_sources=frozenset(col.sources),
        attributes=frozenset(col.attrs),
        predicates=frozenset(col.preds),
        join_pairs=frozenset(col.joins),
        aggregates=frozenset(col.aggs),
        comparison_attrs=frozenset(col.comparison_attrs),
        has_subquery=col.has_subquery,
    )


@dataclass(frozen=True, slots=True)
class SimilarityWeights:
    data_sources: float = 1.0
    attributes: float = 1.0
    predicates: float = 1.0
    join_pairs: float = 1.0

    def validate(self):
        vals = (self.data_sources, self.attributes, self.predicates, self.join_pairs)
        if any(v < 0 for v in vals):
            raise InvalidWeights("similarity weights must be non-negative")
        if sum(vals) <= 0:
            raise InvalidWeights("at least one similarity weight must be positive")

    @classmethod
    def from_json(cls, body: dict) -> "SimilarityWeights":
        w = cls(
            data_sources=float(body.get("data_sources", 1.0)),
            attributes=float(body.get("attributes", 1.0)),
            predicates=float(body.get("predicates", 1.0)),
            join_pairs=float(body.get("join_pairs", 1.0)),
        )
        w.validate()
        return w

    def to_json(self) -> dict:
        return {
            "data_sources": self.data_sources,
            "attributes": self.attributes,
            "predicates": self.predicates,
            "join_pairs": self.join_pairs,
        }


DEFAULT_SIMILARITY = SimilarityWeights()


def jaccard(a: frozenset, b: frozenset) -> float:
    if not a and not b:
        return 1.0  # two empty sets agree perfectly
    inter = len(a & b)
    if inter == 0:
        return 0.0
    return inter / (len(a) + len(b) - inter)


def similarity(a: FeatureSet, b: FeatureSet, weights: SimilarityWeights | None = None) -> float:
    """Weighted mean of per-component Jaccard scores, in [0, 1]."""
    w = weights or DEFAULT_SIMILARITY
    w.validate()
    total = w.data_sources + w.attributes + w.predicates + w.join_pairs
    score = (
        w.data_sources * jaccard(a.data_sources, b.data_sources)
        + w.attributes * jaccard(a.attributes, b.attributes)
        + w.predicates * jaccard(a.predicate_templates(), b.predicate_templates())
        + w.join_pairs * jaccard(a.join_pairs, b.join_pairs)
    )
    return score / total
