"""Parse-tree nodes and the pretty-printer.

A tree is a Node with a kind, ordered children, optional token text, and a
source span. Spans index into the original text and never overlap among
siblings; synthesized nodes get zero-width spans and canonical trees carry
(0, 0) everywhere.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

STATEMENT = "Statement"
SELECT_LIST = "SelectList"
FROM_LIST = "FromList"
WHERE_CLAUSE = "WhereClause"
GROUP_BY = "GroupBy"
HAVING = "Having"
ORDER_BY = "OrderBy"
TABLE_REF = "TableRef"
COLUMN_REF = "ColumnRef"
COMPARISON = "Comparison"
LOGICAL_OP = "LogicalOp"
LITERAL = "Literal"
PLACEHOLDER = "Placeholder"
SUBQUERY = "Subquery"
AGGREGATE = "Aggregate"
STAR = "Star"

KINDS = frozenset(
    {
        STATEMENT,
        SELECT_LIST,
        FROM_LIST,
        WHERE_CLAUSE,
        GROUP_BY,
        HAVING,
        ORDER_BY,
        TABLE_REF,
        COLUMN_REF,
        COMPARISON,
        LOGICAL_OP,
        LITERAL,
        PLACEHOLDER,
        SUBQUERY,
        AGGREGATE,
        STAR,
    }
)

# comparison operators usable in predicates
COMPARATORS = frozenset({"=", "<>", "<", "<=", ">", ">=", "like", "in", "between"})


@dataclass(frozen=True, slots=True)
class Node:
    """One tree node.

    text       token payload: identifier, operator, literal lexeme
    qualifier  relation qualifier on a ColumnRef / Star
    alias      alias on a TableRef or select item
    modifier   "distinct" on Statement/Aggregate, "desc" on order keys,
               "limit" on the statement's limit literal
    quoted     identifier was double-quoted; case is preserved
    """

    kind: str
    text: str | None = None
    qualifier: str | None = None
    alias: str | None = None
    modifier: str | None = None
    quoted: bool = False
    children: tuple["Node", ...] = ()
    span: tuple[int, int] = (0, 0)

    def with_(self, **kw) -> "Node":
        return replace(self, **kw)

    def child(self, kind: str) -> "Node | None":
        for c in self.children:
            if c.kind == kind:
                return c
        return None

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()


def _ident(name: str, quoted: bool) -> str:
    if quoted:
        return '"%s"' % name.replace('"', '""')
    return name


def _render_column(node: Node) -> str:
    base = _ident(node.text or "", node.quoted)
    if node.qualifier:
        # mixed-case qualifiers only survive via quoting
        qual = _ident(node.qualifier, node.qualifier != node.qualifier.lower())
        return "%s.%s" % (qual, base)
    return base


def _needs_parens(parent_op: str, kid: Node) -> bool:
    if kid.kind != LOGICAL_OP:
        return False
    if parent_op == "NOT":
        return kid.text in ("AND", "OR")
    if parent_op == "AND":
        return kid.text == "OR"
    return False


def _render_condition(node: Node) -> str:
    k = node.kind
    if k == LOGICAL_OP:
        op = node.text or ""
        if op == "NOT":
            inner = _render_condition(node.children[0])
            if _needs_parens("NOT", node.children[0]):
                inner = "(%s)" % inner
            return "NOT %s" % inner
        parts = []
        for kid in node.children:
            piece = _render_condition(kid)
            if _needs_parens(op, kid):
                piece = "(%s)" % piece
            parts.append(piece)
        return (" %s " % op).join(parts)
    if k == COMPARISON:
        return _render_comparison(node)
    if k == PLACEHOLDER:
        return node.text or ""
    return _render_operand(node)


def _render_comparison(node: Node) -> str:
    op = node.text
    kids = node.children
    if op is None:  # incomplete tail, e.g. "WHERE temp"
        return _render_operand(kids[0])
    if op == "exists":
        return "EXISTS %s" % _render_operand(kids[0])
    lhs = _render_operand(kids[0])
    if op == "in":
        if len(kids) == 2 and kids[1].kind == SUBQUERY:
            return "%s IN %s" % (lhs, _render_operand(kids[1]))
        vals = ", ".join(_render_operand(c) for c in kids[1:])
        return "%s IN (%s)" % (lhs, vals)
    if op == "between":
        lo = _render_operand(kids[1]) if len(kids) > 1 else ""
        hi = _render_operand(kids[2]) if len(kids) > 2 else ""
        return ("%s BETWEEN %s AND %s" % (lhs, lo, hi)).rstrip()
    if op == "like":
        rhs = _render_operand(kids[1]) if len(kids) > 1 else ""
        return ("%s LIKE %s" % (lhs, rhs)).rstrip()
    rhs = _render_operand(kids[1]) if len(kids) > 1 else ""
    return ("%s %s %s" % (lhs, op, rhs)).rstrip()


def _render_operand(node: Node) -> str:
    k = node.kind
    if k == COLUMN_REF:
        return _render_column(node)
    if k == LITERAL:
        return node.text or ""
    if k == PLACEHOLDER:
        return node.text or ""
    if k == STAR:
        return "%s.*" % node.qualifier if node.qualifier else "*"
    if k == AGGREGATE:
        inner = _render_operand(node.children[0]) if node.children else ""
        if node.modifier == "distinct":
            inner = "DISTINCT %s" % inner
        return "%s(%s)" % ((node.text or "").upper(), inner)
    if k == SUBQUERY:
        return "(%s)" % render(node.children[0])
    if k == COMPARISON:
        return _render_comparison(node)
    return node.text or ""


def _render_select_item(node: Node) -> str:
    body = _render_operand(node)
    if node.alias:
        return "%s AS %s" % (body, node.alias)
    return body


def render(tree: Node) -> str:
    """Statement back to SQL text; uppercase keywords, canonical spacing."""
    if tree.kind == SUBQUERY:
        return _render_operand(tree)
    if tree.kind != STATEMENT:
        return _render_condition(tree)
    parts = ["SELECT"]
    if tree.modifier == "distinct":
        parts.append("DISTINCT")
    for kid in tree.children:
        k = kid.kind
        if k == SELECT_LIST:
            items = [_render_select_item(c) for c in kid.children]
            items = [i for i in items if i]
            if items:
                parts.append(", ".join(items))
        elif k == FROM_LIST:
            refs = []
            for c in kid.children:
                if c.kind == PLACEHOLDER:
                    continue
                ref = _ident(c.text or "", c.quoted)
                if c.alias:
                    ref = "%s AS %s" % (ref, c.alias)
                refs.append(ref)
            parts.append("FROM")
            if refs:
                parts.append(", ".join(refs))
        elif k == WHERE_CLAUSE:
            body = _render_condition(kid.children[0]) if kid.children else ""
            parts.append(("WHERE " + body).rstrip())
        elif k == GROUP_BY:
            cols = ", ".join(_render_operand(c) for c in kid.children if c.kind != PLACEHOLDER)
            parts.append(("GROUP BY " + cols).rstrip())
        elif k == HAVING:
            body = _render_condition(kid.children[0]) if kid.children else ""
            parts.append(("HAVING " + body).rstrip())
        elif k == ORDER_BY:
            keys = []
            for c in kid.children:
                if c.kind == PLACEHOLDER:
                    continue
                key = _render_operand(c)
                if c.modifier == "desc":
                    key += " DESC"
                keys.append(key)
            parts.append(("ORDER BY " + ", ".join(keys)).rstrip())
        elif k == LITERAL and kid.modifier == "limit":
            parts.append("LIMIT %s" % (kid.text or ""))
    return " ".join(p for p in parts if p)


def strip_spans(tree: Node) -> Node:
    kids = tuple(strip_spans(c) for c in tree.children)
    return tree.with_(children=kids, span=(0, 0))
