"""Recursive-descent parser for a SELECT-only dialect.

Supported shape:

    SELECT [DISTINCT] select-list
    FROM table-refs [JOIN t [alias] ON cond]...
    [WHERE bool-expr] [GROUP BY cols] [HAVING bool-expr]
    [ORDER BY keys] [LIMIT n]

Conditions allow AND/OR/NOT, the six comparators, LIKE, IN (value list or
subquery), BETWEEN, EXISTS, and one level of scalar subquery. JOIN ... ON
folds into the WHERE conjunction at parse time so a join and its comma-form
equivalent build the same tree.

The parser follows a match_X protocol: each match_X method consumes tokens
for construct X and returns a Node. Incomplete input is recovered when the
prefix is unambiguous: a missing construct at end of input becomes a
Placeholder node (zero-width span) instead of an error, and trailing commas
before end of input or a clause keyword are tolerated. Anything else raises
SqlSyntaxError with the byte offset and the expected tokens; recognized
constructs outside the dialect raise UnsupportedFeature.
"""
from __future__ import annotations

from ..errors import SqlSyntaxError, UnsupportedFeature
from .lex import AGGREGATE_FUNCS, Token, tokenize
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

_UNSUPPORTED_STATEMENTS = {
    "INSERT",
    "UPDATE",
    "DELETE",
    "CREATE",
    "DROP",
    "ALTER",
    "WITH",
    "VALUES",
    "SET",
    "INTO",
}

_CLAUSE_KEYWORDS = {"FROM", "WHERE", "GROUP", "HAVING", "ORDER", "LIMIT"}

_JOIN_INTRO = {"JOIN", "INNER", "LEFT", "RIGHT", "FULL"}


def parse(text: str) -> Node:
    """Parse text into a Statement tree."""
    return Parser(text).match_statement_top()


class Parser:
    def __init__(self, text: str, depth: int = 0):
        self.text = text
        self.tokens = tokenize(text)
        self.pos = 0
        self.depth = depth  # subquery nesting level

    # --- token plumbing ---

    def peek(self, ahead: int = 0) -> Token:
        i = min(self.pos + ahead, len(self.tokens) - 1)
        return self.tokens[i]

    def take(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.type != "eof":
            self.pos += 1
        return tok

    def at_kw(self, *names: str) -> bool:
        tok = self.peek()
        return tok.type == "kw" and tok.value in names

    def at_op(self, *ops: str) -> bool:
        tok = self.peek()
        return tok.type == "op" and tok.value in ops

    def at_eof(self) -> bool:
        tok = self.peek()
        if tok.type == "eof":
            return True
        # a trailing semicolon terminates the statement
        return tok.type == "op" and tok.value == ";" and self.peek(1).type == "eof"

    def expect_kw(self, name: str) -> Token:
        if not self.at_kw(name):
            raise SqlSyntaxError(self.peek().start, [name])
        return self.take()

    def fail(self, expected: list[str]):
        raise SqlSyntaxError(self.peek().start, expected)

    def placeholder(self) -> Node:
        here = self.peek().start
        return Node(PLACEHOLDER, span=(here, here))

    # --- statements ---

    def match_statement_top(self) -> Node:
        stmt = self.match_statement()
        if self.at_op(";"):
            self.take()
        tok = self.peek()
        if tok.type != "eof":
            if tok.type == "kw" and tok.value in ("UNION", "INTERSECT", "EXCEPT"):
                raise UnsupportedFeature(tok.value.lower())
            self.fail(["end of input"])
        return stmt

    def match_statement(self) -> Node:
        tok = self.peek()
        if not self.at_kw("SELECT"):
            if tok.type == "kw" and tok.value in _UNSUPPORTED_STATEMENTS:
                raise UnsupportedFeature("%s statement" % tok.value.lower())
            raise SqlSyntaxError(tok.start, ["SELECT"])
        start = self.take().start
        distinct = None
        if self.at_kw("DISTINCT"):
            self.take()
            distinct = "distinct"
        children = [self.match_select_list()]
        self._join_conditions: list[Node] = []
        children.append(self.match_from_clause())
        if self.at_kw("WHERE"):
            children.append(self.match_where_clause())
        elif self._join_conditions:
            expr = self._fold_joins(None)
            children.append(Node(WHERE_CLAUSE, children=(expr,), span=expr.span))
        if self.at_kw("GROUP"):
            children.append(self.match_group_by())
        if self.at_kw("HAVING"):
            children.append(self.match_having())
        if self.at_kw("ORDER"):
            children.append(self.match_order_by())
        if self.at_kw("LIMIT"):
            children.append(self.match_limit())
        if self.at_kw("UNION", "INTERSECT", "EXCEPT"):
            raise UnsupportedFeature(self.peek().value.lower())
        end = self.tokens[self.pos - 1].end if self.pos else start
        return Node(
            STATEMENT,
            modifier=distinct,
            children=tuple(children),
            span=(start, max(start, end)),
        )

    # --- select list ---

    def match_select_list(self) -> Node:
        start = self.peek().start
        if self.at_kw("FROM") or self.at_eof():
            # "SELECT FROM ..." and "SELECT" recover to a placeholder list
            return Node(SELECT_LIST, children=(self.placeholder(),), span=(start, start))
        items = [self.match_select_item()]
        while self.at_op(","):
            self.take()
            if self.at_kw("FROM") or self.at_eof() or self._at_clause_boundary():
                break  # tolerate a trailing comma mid-composition
            items.append(self.match_select_item())
        return Node(SELECT_LIST, children=tuple(items), span=(start, items[-1].span[1]))

    def _at_clause_boundary(self) -> bool:
        tok = self.peek()
        return tok.type == "kw" and tok.value in _CLAUSE_KEYWORDS

    def match_select_item(self) -> Node:
        item = self.match_operand(allow_star=True)
        alias = None
        if self.at_kw("AS"):
            self.take()
            alias = self._match_name("an alias")
        elif self.peek().type == "ident":
            alias = self.take().value
        if alias is not None:
            item = item.with_(alias=alias)
        return item

    def _match_name(self, what: str) -> str:
        tok = self.peek()
        if tok.type != "ident":
            self.fail([what])
        return self.take().value

    # --- FROM clause; JOIN folds into the pending WHERE conjunction ---

    def match_from_clause(self) -> Node:
        start = self.peek().start
        if not self.at_kw("FROM"):
            if self.at_eof():
                return Node(FROM_LIST, children=(self.placeholder(),), span=(start, start))
            self.fail(["FROM"])
        self.take()
        refs: list[Node] = []
        if self.at_eof() or self._at_clause_boundary():
            return Node(FROM_LIST, children=(self.placeholder(),), span=(start, start))
        refs.append(self.match_table_ref())
        while True:
            if self.at_op(","):
                self.take()
                if self.at_eof() or self._at_clause_boundary():
                    break
                refs.append(self.match_table_ref())
            elif self.at_kw(*_JOIN_INTRO):
                refs.append(self.match_join_tail())
            elif self.at_kw("CROSS", "NATURAL"):
                raise UnsupportedFeature("%s join" % self.peek().value.lower())
            else:
                break
        end = refs[-1].span[1] if refs else start
        return Node(FROM_LIST, children=tuple(refs), span=(start, end))

    def match_table_ref(self) -> Node:
        tok = self.peek()
        if tok.type != "ident":
            self.fail(["a table name"])
        self.take()
        alias = None
        if self.at_kw("AS"):
            self.take()
            alias = self._match_name("an alias")
        elif self.peek().type == "ident":
            alias = self.take().value
        end = self.tokens[self.pos - 1].end
        return Node(
            TABLE_REF,
            text=tok.value,
            alias=alias,
            quoted=tok.quoted,
            span=(tok.start, end),
        )

    def match_join_tail(self) -> Node:
        kw = self.take().value
        if kw in ("LEFT", "RIGHT", "FULL"):
            if self.at_kw("OUTER"):
                self.take()
            self.expect_kw("JOIN")
        elif kw == "INNER":
            self.expect_kw("JOIN")
        if self.at_kw("USING"):
            raise UnsupportedFeature("join using")
        ref = self.match_table_ref()
        if self.at_kw("USING"):
            raise UnsupportedFeature("join using")
        if self.at_kw("ON"):
            self.take()
            if self.at_eof():
                self._join_conditions.append(self.placeholder())
            else:
                self._join_conditions.append(self.match_or_expr())
        elif not self.at_eof():
            self.fail(["ON"])
        return ref

    # --- WHERE / HAVING conditions ---

    def match_where_clause(self) -> Node:
        start = self.take().start  # WHERE
        if self.at_eof():
            expr = self.placeholder()
        else:
            expr = self.match_or_expr()
        expr = self._fold_joins(expr)
        return Node(WHERE_CLAUSE, children=(expr,), span=(start, expr.span[1]))

    def _fold_joins(self, expr: Node | None) -> Node:
        pending = getattr(self, "_join_conditions", [])
        if not pending:
            return expr if expr is not None else self.placeholder()
        conds = list(pending)
        self._join_conditions = []
        if expr is not None and expr.kind != PLACEHOLDER:
            conds.append(expr)
        if len(conds) == 1:
            return conds[0]
        span = (conds[0].span[0], conds[-1].span[1])
        return Node(LOGICAL_OP, text="AND", children=tuple(conds), span=span)

    def match_or_expr(self) -> Node:
        left = self.match_and_expr()
        while self.at_kw("OR"):
            self.take()
            if self.at_eof():
                right = self.placeholder()
            else:
                right = self.match_and_expr()
            left = Node(
                LOGICAL_OP,
                text="OR",
                children=(left, right),
                span=(left.span[0], right.span[1]),
            )
        return left

    def match_and_expr(self) -> Node:
        left = self.match_not_expr()
        while self.at_kw("AND"):
            self.take()
            if self.at_eof():
                right = self.placeholder()
            else:
                right = self.match_not_expr()
            left = Node(
                LOGICAL_OP,
                text="AND",
                children=(left, right),
                span=(left.span[0], right.span[1]),
            )
        return left

    def match_not_expr(self) -> Node:
        if self.at_kw("NOT"):
            start = self.take().start
            if self.at_eof():
                inner = self.placeholder()
            else:
                inner = self.match_not_expr()
            return Node(LOGICAL_OP, text="NOT", children=(inner,), span=(start, inner.span[1]))
        return self.match_condition()

    def match_condition(self) -> Node:
        if self.at_kw("EXISTS"):
            start = self.take().start
            if self.at_eof():
                ph = self.placeholder()
                return Node(COMPARISON, text="exists", children=(ph,), span=(start, start))
            sub = self.match_subquery()
            return Node(COMPARISON, text="exists", children=(sub,), span=(start, sub.span[1]))
        if self.at_op("("):
            # parenthesized boolean or scalar subquery operand
            if self.peek(1).type == "kw" and self.peek(1).value == "SELECT":
                lhs = self.match_subquery()
                return self.match_comparison_tail(lhs)
            self.take()
            if self.at_eof():
                return self.placeholder()
            inner = self.match_or_expr()
            if self.at_op(")"):
                self.take()
            elif not self.at_eof():
                self.fail([")"])
            return inner
        lhs = self.match_operand()
        return self.match_comparison_tail(lhs)

    def match_comparison_tail(self, lhs: Node) -> Node:
        negated = False
        if self.at_kw("NOT"):
            self.take()
            if not self.at_kw("LIKE", "IN", "BETWEEN"):
                self.fail(["LIKE", "IN", "BETWEEN"])
            negated = True
        node = None
        tok = self.peek()
        if self.at_op("=", "<>", "<", "<=", ">", ">="):
            op = self.take().value
            rhs = self._comparison_operand()
            node = Node(COMPARISON, text=op, children=(lhs, rhs), span=(lhs.span[0], rhs.span[1]))
        elif self.at_kw("LIKE"):
            self.take()
            rhs = self._comparison_operand()
            node = Node(COMPARISON, text="like", children=(lhs, rhs), span=(lhs.span[0], rhs.span[1]))
        elif self.at_kw("IN"):
            self.take()
            node = self.match_in_tail(lhs)
        elif self.at_kw("BETWEEN"):
            self.take()
            node = self.match_between_tail(lhs)
        elif self.at_kw("IS"):
            raise UnsupportedFeature("is comparison")
        elif self.at_eof():
            # bare operand at end of input: incomplete comparison
            node = Node(COMPARISON, text=None, children=(lhs,), span=lhs.span)
        else:
            raise SqlSyntaxError(tok.start, ["=", "<>", "<", "<=", ">", ">=", "LIKE", "IN", "BETWEEN"])
        if negated:
            node = Node(LOGICAL_OP, text="NOT", children=(node,), span=node.span)
        return node

    def _comparison_operand(self) -> Node:
        if self.at_eof():
            return self.placeholder()
        if self.at_op("(") and self.peek(1).type == "kw" and self.peek(1).value == "SELECT":
            return self.match_subquery()
        return self.match_operand()

    def match_in_tail(self, lhs: Node) -> Node:
        if self.at_eof():
            return Node(COMPARISON, text="in", children=(lhs, self.placeholder()), span=lhs.span)
        if not self.at_op("("):
            self.fail(["("])
        if self.peek(1).type == "kw" and self.peek(1).value == "SELECT":
            sub = self.match_subquery()
            return Node(COMPARISON, text="in", children=(lhs, sub), span=(lhs.span[0], sub.span[1]))
        self.take()
        values: list[Node] = []
        while True:
            if self.at_eof():
                break
            if self.at_op(")"):
                end = self.take().end
                return Node(COMPARISON, text="in", children=(lhs, *values), span=(lhs.span[0], end))
            values.append(self.match_operand())
            if self.at_op(","):
                self.take()
            elif not self.at_op(")") and not self.at_eof():
                self.fail([",", ")"])
        return Node(COMPARISON, text="in", children=(lhs, *values), span=(lhs.span[0], self.peek().start))

    def match_between_tail(self, lhs: Node) -> Node:
        lo = self.placeholder() if self.at_eof() else self.match_operand()
        if self.at_kw("AND"):
            self.take()
            hi = self.placeholder() if self.at_eof() else self.match_operand()
        elif self.at_eof():
            hi = self.placeholder()
        else:
            self.fail(["AND"])
        return Node(COMPARISON, text="between", children=(lhs, lo, hi), span=(lhs.span[0], hi.span[1]))

    # --- operands ---

    def match_operand(self, allow_star: bool = False) -> Node:
        tok = self.peek()
        if tok.type == "op" and tok.value == "*" and allow_star:
            self.take()
            return Node(STAR, span=(tok.start, tok.end))
        if tok.type == "op" and tok.value == "?":
            self.take()
            return Node(PLACEHOLDER, text="?", span=(tok.start, tok.end))
        if tok.type == "op" and tok.value == "-" and self.peek(1).type == "number":
            self.take()
            num = self.take()
            return Node(LITERAL, text="-" + num.value, span=(tok.start, num.end))
        if tok.type == "number":
            self.take()
            return Node(LITERAL, text=tok.value, span=(tok.start, tok.end))
        if tok.type == "string":
            self.take()
            lexeme = "'%s'" % tok.value.replace("'", "''")
            return Node(LITERAL, text=lexeme, span=(tok.start, tok.end))
        if tok.type == "kw" and tok.value == "NULL":
            raise UnsupportedFeature("null literal")
        if tok.type == "ident":
            if tok.value.lower() in AGGREGATE_FUNCS and self.peek(1).type == "op" and self.peek(1).value == "(":
                return self.match_aggregate()
            return self.match_column_ref(allow_star=allow_star)
        if tok.type == "op" and tok.value == "(" and self.peek(1).type == "kw" and self.peek(1).value == "SELECT":
            return self.match_subquery()
        if tok.type == "op" and tok.value in ("+", "/"):
            raise UnsupportedFeature("arithmetic expression")
        expected = ["a column", "a literal"]
        if allow_star:
            expected.append("*")
        self.fail(expected)

    def match_column_ref(self, allow_star: bool = False) -> Node:
        tok = self.take()
        if self.at_op(".") :
            self.take()
            attr = self.peek()
            if attr.type == "op" and attr.value == "*" and allow_star:
                end = self.take().end
                return Node(STAR, qualifier=tok.value, span=(tok.start, end))
            if attr.type != "ident":
                self.fail(["an attribute name"])
            self.take()
            return Node(
                COLUMN_REF,
                text=attr.value,
                qualifier=tok.value,
                quoted=attr.quoted,
                span=(tok.start, attr.end),
            )
        return Node(COLUMN_REF, text=tok.value, quoted=tok.quoted, span=(tok.start, tok.end))

    def match_aggregate(self) -> Node:
        fn = self.take()
        self.take()  # (
        modifier = None
        if self.at_kw("DISTINCT"):
            self.take()
            modifier = "distinct"
        tok = self.peek()
        if tok.type == "op" and tok.value == "*":
            self.take()
            arg = Node(STAR, span=(tok.start, tok.end))
        elif self.at_eof():
            arg = self.placeholder()
        else:
            arg = self.match_column_ref()
        if self.at_op(")"):
            end = self.take().end
        elif self.at_eof():
            end = self.peek().start
        else:
            self.fail([")"])
        if self.at_kw("OVER"):
            raise UnsupportedFeature("window function")
        return Node(
            AGGREGATE,
            text=fn.value.lower(),
            modifier=modifier,
            children=(arg,),
            span=(fn.start, end),
        )

    def match_subquery(self) -> Node:
        if self.depth >= 1:
            raise UnsupportedFeature("nested subquery")
        open_tok = self.take()  # (
        # find the matching close paren, then parse the slice recursively
        depth = 1
        i = self.pos
        while i < len(self.tokens) - 1:
            tok = self.tokens[i]
            if tok.type == "op" and tok.value == "(":
                depth += 1
            elif tok.type == "op" and tok.value == ")":
                depth -= 1
                if depth == 0:
                    break
            i += 1
        inner_tokens = self.tokens[self.pos : i]
        end_pos = self.tokens[i].start if i < len(self.tokens) - 1 else len(self.text)
        if not inner_tokens:
            # "EXISTS (" at end of input: unambiguous but empty
            stmt = Node(PLACEHOLDER, span=(end_pos, end_pos))
        else:
            sub_parser = Parser.__new__(Parser)
            sub_parser.text = self.text
            sub_parser.tokens = inner_tokens + [Token("eof", "", end_pos, end_pos)]
            sub_parser.pos = 0
            sub_parser.depth = self.depth + 1
            stmt = sub_parser.match_statement()
            leftover = sub_parser.peek()
            if leftover.type != "eof":
                raise SqlSyntaxError(leftover.start, ["end of subquery"])
        if i < len(self.tokens) - 1:
            self.pos = i + 1  # past the close paren
            end = self.tokens[i].end
        else:
            self.pos = i
            end = end_pos
        return Node(SUBQUERY, children=(stmt,), span=(open_tok.start, end))

    # --- trailing clauses ---

    def match_group_by(self) -> Node:
        start = self.take().start  # GROUP
        if not self.at_kw("BY"):
            if self.at_eof():
                return Node(GROUP_BY, children=(self.placeholder(),), span=(start, start))
            self.fail(["BY"])
        self.take()
        cols = self._match_key_list(allow_direction=False)
        end = cols[-1].span[1] if cols else start
        return Node(GROUP_BY, children=tuple(cols), span=(start, end))

    def match_having(self) -> Node:
        start = self.take().start
        if self.at_eof():
            expr = self.placeholder()
        else:
            expr = self.match_or_expr()
        return Node(HAVING, children=(expr,), span=(start, expr.span[1]))

    def match_order_by(self) -> Node:
        start = self.take().start  # ORDER
        if not self.at_kw("BY"):
            if self.at_eof():
                return Node(ORDER_BY, children=(self.placeholder(),), span=(start, start))
            self.fail(["BY"])
        self.take()
        keys = self._match_key_list(allow_direction=True)
        end = keys[-1].span[1] if keys else start
        return Node(ORDER_BY, children=tuple(keys), span=(start, end))

    def _match_key_list(self, allow_direction: bool) -> list[Node]:
        keys: list[Node] = []
        if self.at_eof() or self._at_clause_boundary():
            return [self.placeholder()]
        while True:
            tok = self.peek()
            if tok.type == "ident" and tok.value.lower() in AGGREGATE_FUNCS and self.peek(1).value == "(":
                key = self.match_aggregate()
            elif tok.type == "ident":
                key = self.match_column_ref()
            elif self.at_eof():
                keys.append(self.placeholder())
                break
            else:
                self.fail(["a column"])
            if allow_direction and self.at_kw("ASC", "DESC"):
                d = self.take().value.lower()
                if d == "desc":
                    key = key.with_(modifier="desc")
            keys.append(key)
            if self.at_op(","):
                self.take()
                if self.at_eof() or self._at_clause_boundary():
                    break
            else:
                break
        return keys

    def match_limit(self) -> Node:
        start = self.take().start
        tok = self.peek()
        if tok.type == "number":
            self.take()
            return Node(LITERAL, text=tok.value, modifier="limit", span=(tok.start, tok.end))
        if self.at_eof():
            return Node(PLACEHOLDER, span=(start, start))
        self.fail(["a row count"])
