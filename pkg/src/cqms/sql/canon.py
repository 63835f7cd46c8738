"""Canonical form for parse trees.

canonicalize() rewrites a tree so that equivalent spellings compare equal:
identifiers are case-folded (quoted ones keep their case), table aliases are
resolved to base relation names and dropped, AND/OR chains are flattened and
their children sorted by a stable key, comparisons are column-first with the
operator flipped as needed, and literals get one normal form. Incomplete
fragments left by parser recovery are pruned. The result carries zero spans;
canonicalize is idempotent and composes with render()/parse() as a fixed
point.
"""
from __future__ import annotations

from ..errors import InvalidMetaQuery
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
    render,
)

PARAM = None  # predicate constant standing for a placeholder

_FLIP = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "=", "<>": "<>"}


def normalize_literal_text(text: str) -> str:
    """One spelling per value: ints plain, floats via repr, strings quoted."""
    if text.startswith("'"):
        return text  # already canonical: parser re-quotes strings
    try:
        return str(int(text))
    except ValueError:
        value = float(text)
        if value.is_integer():
            return str(int(value))
        return repr(value)


def literal_value(text: str):
    """Typed value of a canonical literal lexeme."""
    if text.startswith("'"):
        return text[1:-1].replace("''", "'")
    try:
        return int(text)
    except ValueError:
        return float(text)


def const_sort_key(value) -> tuple:
    """Total order over predicate constants of mixed type."""
    if value is None:
        return (0, "")
    if isinstance(value, bool):
        return (1, str(value))
    if isinstance(value, (int, float)):
        return (2, float(value))
    if isinstance(value, str):
        return (3, value)
    if isinstance(value, tuple):
        return (4,) + tuple(const_sort_key(v) for v in value)
    return (5, str(value))


def canonicalize(tree: Node) -> Node:
    """Canonical form; idempotent, spans zeroed."""
    if tree.kind != STATEMENT:
        raise InvalidMetaQuery("canonicalize expects a Statement tree")
    return _canon_statement(tree, outer_aliases={})


def _alias_map(from_list: Node | None) -> dict[str, str]:
    out: dict[str, str] = {}
    if from_list is None:
        return out
    for ref in from_list.children:
        if ref.kind != TABLE_REF:
            continue
        base = ref.text if ref.quoted else (ref.text or "").lower()
        out[(ref.text or "").lower()] = base
        if ref.alias:
            out[ref.alias.lower()] = base
    return out


def _canon_statement(tree: Node, outer_aliases: dict[str, str]) -> Node:
    aliases = dict(outer_aliases)
    aliases.update(_alias_map(tree.child(FROM_LIST)))
    children: list[Node] = []
    for kid in tree.children:
        k = kid.kind
        if k == SELECT_LIST:
            items = []
            for item in kid.children:
                it = _canon_operand(item, aliases)
                if it is not None:
                    items.append(it.with_(alias=None))
            if not items:
                items = [Node(PLACEHOLDER)]
            children.append(Node(SELECT_LIST, children=tuple(items)))
        elif k == FROM_LIST:
            refs = []
            seen = set()
            for ref in kid.children:
                if ref.kind != TABLE_REF:
                    continue
                base = ref.text if ref.quoted else (ref.text or "").lower()
                if base in seen:
                    continue  # duplicate relations collapse once aliases drop
                seen.add(base)
                refs.append(Node(TABLE_REF, text=base, quoted=ref.quoted))
            refs.sort(key=lambda r: r.text or "")
            if refs:
                children.append(Node(FROM_LIST, children=tuple(refs)))
        elif k == WHERE_CLAUSE:
            cond = _canon_condition(kid.children[0], aliases) if kid.children else None
            if cond is not None:
                children.append(Node(WHERE_CLAUSE, children=(cond,)))
        elif k == GROUP_BY:
            cols = [c for c in (_canon_operand(x, aliases) for x in kid.children) if c is not None]
            cols.sort(key=_operand_key)
            if cols:
                children.append(Node(GROUP_BY, children=tuple(cols)))
        elif k == HAVING:
            cond = _canon_condition(kid.children[0], aliases) if kid.children else None
            if cond is not None:
                children.append(Node(HAVING, children=(cond,)))
        elif k == ORDER_BY:
            keys = [c for c in (_canon_operand(x, aliases) for x in kid.children) if c is not None]
            # order keys keep their written order: it is semantic
            if keys:
                children.append(Node(ORDER_BY, children=tuple(keys)))
        elif k == LITERAL and kid.modifier == "limit":
            children.append(
                Node(LITERAL, text=normalize_literal_text(kid.text or "0"), modifier="limit")
            )
    return Node(STATEMENT, modifier=tree.modifier, children=tuple(children))


def _canon_operand(node: Node, aliases: dict[str, str]) -> Node | None:
    k = node.kind
    if k == PLACEHOLDER:
        return Node(PLACEHOLDER, text=node.text) if node.text else None
    if k == COLUMN_REF:
        name = node.text if node.quoted else (node.text or "").lower()
        qual = None
        if node.qualifier:
            q = node.qualifier.lower()
            qual = aliases.get(q, q)
        return Node(COLUMN_REF, text=name, qualifier=qual, quoted=node.quoted, modifier=_dir(node))
    if k == STAR:
        qual = None
        if node.qualifier:
            q = node.qualifier.lower()
            qual = aliases.get(q, q)
        return Node(STAR, qualifier=qual)
    if k == LITERAL:
        return Node(LITERAL, text=normalize_literal_text(node.text or "0"))
    if k == AGGREGATE:
        arg = _canon_operand(node.children[0], aliases) if node.children else None
        if arg is None:
            arg = Node(PLACEHOLDER)
        return Node(
            AGGREGATE,
            text=(node.text or "").lower(),
            modifier="distinct" if node.modifier == "distinct" else _dir(node),
            children=(arg,),
        )
    if k == SUBQUERY:
        if node.children and node.children[0].kind == STATEMENT:
            return Node(SUBQUERY, children=(_canon_statement(node.children[0], aliases),))
        return None
    if k == COMPARISON:
        return _canon_comparison(node, aliases)
    return None


def _dir(node: Node) -> str | None:
    return "desc" if node.modifier == "desc" else None


def _canon_condition(node: Node, aliases: dict[str, str]) -> Node | None:
    k = node.kind
    if k == PLACEHOLDER:
        return None
    if k == LOGICAL_OP:
        op = node.text
        if op == "NOT":
            inner = _canon_condition(node.children[0], aliases) if node.children else None
            if inner is None:
                return None
            return Node(LOGICAL_OP, text="NOT", children=(inner,))
        kids: list[Node] = []
        for kid in node.children:
            c = _canon_condition(kid, aliases)
            if c is None:
                continue
            if c.kind == LOGICAL_OP and c.text == op:
                kids.extend(c.children)  # flatten same-operator chains
            else:
                kids.append(c)
        if not kids:
            return None
        seen: dict[str, Node] = {}
        for c in kids:
            seen.setdefault(render(c), c)  # AND/OR are idempotent: dedupe
        kids = [seen[key] for key in sorted(seen)]
        if len(kids) == 1:
            return kids[0]
        return Node(LOGICAL_OP, text=op, children=tuple(kids))
    if k == COMPARISON:
        return _canon_comparison(node, aliases)
    return None


def _is_valueish(node: Node) -> bool:
    return node.kind in (LITERAL, PLACEHOLDER)


def _canon_comparison(node: Node, aliases: dict[str, str]) -> Node | None:
    op = node.text
    if op is None:
        return None  # incomplete tail like "WHERE temp"
    if op == "exists":
        sub = _canon_operand(node.children[0], aliases) if node.children else None
        if sub is None:
            return None
        return Node(COMPARISON, text="exists", children=(sub,))
    kids = [(_canon_operand(c, aliases)) for c in node.children]
    if not kids or kids[0] is None:
        return None
    lhs = kids[0]
    if op == "in":
        rest = [c for c in kids[1:] if c is not None]
        if len(rest) == 1 and rest[0].kind == SUBQUERY:
            return Node(COMPARISON, text="in", children=(lhs, rest[0]))
        rest.sort(key=_operand_key)
        return Node(COMPARISON, text="in", children=(lhs, *rest))
    if op == "between":
        lo = kids[1] if len(kids) > 1 and kids[1] is not None else Node(PLACEHOLDER, text="?")
        hi = kids[2] if len(kids) > 2 and kids[2] is not None else Node(PLACEHOLDER, text="?")
        return Node(COMPARISON, text="between", children=(lhs, lo, hi))
    rhs = kids[1] if len(kids) > 1 and kids[1] is not None else Node(PLACEHOLDER, text="?")
    if op == "like":
        return Node(COMPARISON, text="like", children=(lhs, rhs))
    # column-first: flip when only the right side is a column-ish operand
    if _is_valueish(lhs) and not _is_valueish(rhs):
        lhs, rhs = rhs, lhs
        op = _FLIP[op]
    elif lhs.kind == COLUMN_REF and rhs.kind == COLUMN_REF:
        if _operand_key(lhs) > _operand_key(rhs):
            lhs, rhs = rhs, lhs
            op = _FLIP[op]
    return Node(COMPARISON, text=op, children=(lhs, rhs))


def _operand_key(node: Node) -> tuple:
    if node.kind == LITERAL:
        return (1,) + const_sort_key(literal_value(node.text or "0"))
    if node.kind == PLACEHOLDER:
        return (0, "")
    return (2, render(node))


def template(tree: Node) -> Node:
    """Replace every Literal with a parameter marker; idempotent."""
    if tree.kind == LITERAL:
        return Node(PLACEHOLDER, text="?", span=tree.span)
    if not tree.children:
        return tree
    return tree.with_(children=tuple(template(c) for c in tree.children))
