"""Edit scripts between two queries, computed feature-wise.

An EditScript is the ordered list of Edits that turns the source FeatureSet
into the target one: relation edits first, then predicate edits (a pair that
differs only in its constant coalesces into ChangeConstant), then projection
and grouping edits, then structured Other edits for join, aggregate,
order/having-attribute, and subquery changes. Where-role attributes are
derived state (see features) and never appear as standalone edits.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .canon import PARAM, const_sort_key
from .features import FeatureSet

ADD_RELATION = "AddRelation"
REMOVE_RELATION = "RemoveRelation"
ADD_PREDICATE = "AddPredicate"
REMOVE_PREDICATE = "RemovePredicate"
CHANGE_CONSTANT = "ChangeConstant"
ADD_PROJECTION = "AddProjection"
REMOVE_PROJECTION = "RemoveProjection"
ADD_GROUP_BY = "AddGroupBy"
REMOVE_GROUP_BY = "RemoveGroupBy"
OTHER = "Other"

_REVERSE = {
    ADD_RELATION: REMOVE_RELATION,
    REMOVE_RELATION: ADD_RELATION,
    ADD_PREDICATE: REMOVE_PREDICATE,
    REMOVE_PREDICATE: ADD_PREDICATE,
    CHANGE_CONSTANT: CHANGE_CONSTANT,
    ADD_PROJECTION: REMOVE_PROJECTION,
    REMOVE_PROJECTION: ADD_PROJECTION,
    ADD_GROUP_BY: REMOVE_GROUP_BY,
    REMOVE_GROUP_BY: ADD_GROUP_BY,
    OTHER: OTHER,
}

_GROUP_RANK = {
    ADD_RELATION: 0,
    REMOVE_RELATION: 0,
    ADD_PREDICATE: 1,
    REMOVE_PREDICATE: 1,
    CHANGE_CONSTANT: 1,
    ADD_PROJECTION: 2,
    REMOVE_PROJECTION: 2,
    ADD_GROUP_BY: 3,
    REMOVE_GROUP_BY: 3,
    OTHER: 4,
}


@dataclass(frozen=True)
class Edit:
    kind: str
    payload: dict

    def label(self) -> str:
        p = self.payload
        k = self.kind
        if k == ADD_RELATION:
            return "+ relation %s" % p["relation"]
        if k == REMOVE_RELATION:
            return "- relation %s" % p["relation"]
        if k == ADD_PREDICATE:
            return "+ %s" % _pred_text(p["attribute"], p["op"], p["constant"])
        if k == REMOVE_PREDICATE:
            return "- %s" % _pred_text(p["attribute"], p["op"], p["constant"])
        if k == CHANGE_CONSTANT:
            return "%s -> %s" % (
                _pred_text(p["attribute"], p["op"], p["old"]),
                _pred_text(p["attribute"], p["op"], p["new"]),
            )
        if k == ADD_PROJECTION:
            return "+ select %s" % p["attribute"]
        if k == REMOVE_PROJECTION:
            return "- select %s" % p["attribute"]
        if k == ADD_GROUP_BY:
            return "+ group by %s" % p["attribute"]
        if k == REMOVE_GROUP_BY:
            return "- group by %s" % p["attribute"]
        return p.get("description", "other change")

    def to_json(self) -> dict:
        body = {"kind": self.kind}
        for key, value in self.payload.items():
            body[key] = _const_to_json(value)
        return body

    @classmethod
    def from_json(cls, body: dict) -> "Edit":
        payload = {}
        for key, value in body.items():
            if key == "kind":
                continue
            payload[key] = _const_from_json(value)
        return cls(kind=body["kind"], payload=payload)


def _const_to_json(value):
    if value is PARAM:
        return {"param": True}
    if isinstance(value, tuple):
        return [_const_to_json(v) for v in value]
    if isinstance(value, frozenset):
        return sorted(value)
    return value


def _const_from_json(value):
    if isinstance(value, dict):
        return PARAM
    if isinstance(value, list):
        return tuple(_const_from_json(v) for v in value)
    return value


def _const_text(c) -> str:
    if c is PARAM:
        return "?"
    if isinstance(c, str):
        return "'%s'" % c.replace("'", "''")
    if isinstance(c, tuple):
        return "(%s)" % ", ".join(_const_text(v) for v in c)
    return str(c)


def _pred_text(attr: str, op: str, const) -> str:
    if op == "between" and isinstance(const, tuple) and len(const) == 2:
        return "%s BETWEEN %s AND %s" % (attr, _const_text(const[0]), _const_text(const[1]))
    if op == "in":
        return "%s IN %s" % (attr, _const_text(const))
    if op == "like":
        return "%s LIKE %s" % (attr, _const_text(const))
    return "%s %s %s" % (attr, op, _const_text(const))


EditScript = tuple


def _sort_key(edit: Edit) -> tuple:
    p = edit.payload
    name = (
        p.get("relation")
        or p.get("attribute")
        or p.get("function")
        or p.get("component", "")
        or ""
    )
    extra: tuple = ()
    if edit.kind == CHANGE_CONSTANT:
        pair = sorted((const_sort_key(p.get("old")), const_sort_key(p.get("new"))))
        extra = (p.get("op") or "", tuple(pair))
    elif "constant" in p:
        extra = (p.get("op") or "", const_sort_key(p.get("constant")))
    elif "value" in p:
        extra = (str(p.get("value")),)
    # full-content tiebreak: ordering must not depend on insertion order
    content = tuple(sorted((k, str(v)) for k, v in p.items() if k != "description"))
    return (_GROUP_RANK[edit.kind], name, str(p.get("relation") or ""), edit.kind, extra, content)


def diff_features(a: FeatureSet, b: FeatureSet) -> tuple:
    """Edits that turn a into b; empty iff the two are feature-identical."""
    edits: list[Edit] = []
    for r in b.data_sources - a.data_sources:
        edits.append(Edit(ADD_RELATION, {"relation": r}))
    for r in a.data_sources - b.data_sources:
        edits.append(Edit(REMOVE_RELATION, {"relation": r}))

    removed = a.predicates - b.predicates
    added = b.predicates - a.predicates
    # pair removed/added predicates sharing (attr, rel, op) into constant changes
    by_key_removed: dict = {}
    for p in removed:
        by_key_removed.setdefault(p[:3], []).append(p)
    by_key_added: dict = {}
    for p in added:
        by_key_added.setdefault(p[:3], []).append(p)
    for key in set(by_key_removed) | set(by_key_added):
        outs = sorted(by_key_removed.get(key, []), key=lambda p: const_sort_key(p[3]))
        ins = sorted(by_key_added.get(key, []), key=lambda p: const_sort_key(p[3]))
        attr, rel, op = key
        for old_p, new_p in zip(outs, ins):
            edits.append(
                Edit(
                    CHANGE_CONSTANT,
                    {"attribute": attr, "relation": rel, "op": op, "old": old_p[3], "new": new_p[3]},
                )
            )
        for p in outs[len(ins):]:
            edits.append(
                Edit(
                    REMOVE_PREDICATE,
                    {"attribute": attr, "relation": rel, "op": op, "constant": p[3]},
                )
            )
        for p in ins[len(outs):]:
            edits.append(
                Edit(
                    ADD_PREDICATE,
                    {"attribute": attr, "relation": rel, "op": op, "constant": p[3]},
                )
            )

    def role_attrs(fs: FeatureSet, role: str) -> set:
        return {(x, r) for (x, r, ro) in fs.attributes if ro == role}

    for attr, rel in role_attrs(b, "select") - role_attrs(a, "select"):
        edits.append(Edit(ADD_PROJECTION, {"attribute": attr, "relation": rel}))
    for attr, rel in role_attrs(a, "select") - role_attrs(b, "select"):
        edits.append(Edit(REMOVE_PROJECTION, {"attribute": attr, "relation": rel}))
    for attr, rel in role_attrs(b, "groupby") - role_attrs(a, "groupby"):
        edits.append(Edit(ADD_GROUP_BY, {"attribute": attr, "relation": rel}))
    for attr, rel in role_attrs(a, "groupby") - role_attrs(b, "groupby"):
        edits.append(Edit(REMOVE_GROUP_BY, {"attribute": attr, "relation": rel}))

    for role in ("orderby", "having"):
        for attr, rel in role_attrs(b, role) - role_attrs(a, role):
            edits.append(_other("attributes", "add", attribute=attr, relation=rel, role=role))
        for attr, rel in role_attrs(a, role) - role_attrs(b, role):
            edits.append(_other("attributes", "remove", attribute=attr, relation=rel, role=role))
    for pair in b.join_pairs - a.join_pairs:
        edits.append(_other("join_pairs", "add", value=tuple(sorted(pair))))
    for pair in a.join_pairs - b.join_pairs:
        edits.append(_other("join_pairs", "remove", value=tuple(sorted(pair))))
    for attr, rel in b.comparison_attrs - a.comparison_attrs:
        edits.append(_other("comparison_attrs", "add", attribute=attr, relation=rel))
    for attr, rel in a.comparison_attrs - b.comparison_attrs:
        edits.append(_other("comparison_attrs", "remove", attribute=attr, relation=rel))
    for fn, attr in b.aggregates - a.aggregates:
        edits.append(_other("aggregates", "add", function=fn, attribute=attr))
    for fn, attr in a.aggregates - b.aggregates:
        edits.append(_other("aggregates", "remove", function=fn, attribute=attr))
    if a.has_subquery != b.has_subquery:
        edits.append(_other("has_subquery", "set", value=b.has_subquery))

    edits.sort(key=_sort_key)
    return tuple(edits)


def _other(component: str, op: str, **payload) -> Edit:
    body = {"component": component, "op": op}
    body.update(payload)
    body["description"] = "%s %s %s" % (
        op,
        component,
        payload.get("attribute") or payload.get("function") or payload.get("value", ""),
    )
    return Edit(OTHER, body)


def diff(a_tree, b_tree, schema=None) -> tuple:
    """Edit script between two canonical trees."""
    from .features import extract_features

    return diff_features(extract_features(a_tree, schema), extract_features(b_tree, schema))


def reverse_script(script: tuple) -> tuple:
    """The script that undoes `script`; equals diff of the swapped pair."""
    out = []
    for e in script:
        kind = _REVERSE[e.kind]
        p = dict(e.payload)
        if e.kind == CHANGE_CONSTANT:
            p["old"], p["new"] = p["new"], p["old"]
        elif e.kind == OTHER:
            if p.get("op") == "add":
                p["op"] = "remove"
            elif p.get("op") == "remove":
                p["op"] = "add"
            elif p.get("component") == "has_subquery":
                p["value"] = not p["value"]
            if "description" in p:
                comp = p.get("component", "")
                p["description"] = "%s %s %s" % (
                    p.get("op", "set"),
                    comp,
                    p.get("attribute") or p.get("function") or p.get("value", ""),
                )
        out.append(Edit(kind, p))
    out.sort(key=_sort_key)
    return tuple(out)


def apply_script(fs: FeatureSet, script: tuple) -> FeatureSet:
    """Apply additions/removals to a source FeatureSet.

    Where-role attributes are recomputed from the resulting predicates and
    comparison columns rather than edited directly.
    """
    sources = set(fs.data_sources)
    preds = set(fs.predicates)
    attrs = {(a, r, ro) for (a, r, ro) in fs.attributes if ro != "where"}
    joins = set(fs.join_pairs)
    aggs = set(fs.aggregates)
    comparison_attrs = set(fs.comparison_attrs)
    has_subquery = fs.has_subquery

    for e in script:
        k = e.kind
        p = e.payload
        if k == ADD_RELATION:
            sources.add(p["relation"])
        elif k == REMOVE_RELATION:
            sources.discard(p["relation"])
        elif k == ADD_PREDICATE:
            preds.add((p["attribute"], p["relation"], p["op"], p["constant"]))
        elif k == REMOVE_PREDICATE:
            preds.discard((p["attribute"], p["relation"], p["op"], p["constant"]))
        elif k == CHANGE_CONSTANT:
            preds.discard((p["attribute"], p["relation"], p["op"], p["old"]))
            preds.add((p["attribute"], p["relation"], p["op"], p["new"]))
        elif k == ADD_PROJECTION:
            attrs.add((p["attribute"], p["relation"], "select"))
        elif k == REMOVE_PROJECTION:
            attrs.discard((p["attribute"], p["relation"], "select"))
        elif k == ADD_GROUP_BY:
            attrs.add((p["attribute"], p["relation"], "groupby"))
        elif k == REMOVE_GROUP_BY:
            attrs.discard((p["attribute"], p["relation"], "groupby"))
        elif k == OTHER:
            comp = p.get("component")
            op = p.get("op")
            if comp == "attributes":
                triple = (p["attribute"], p["relation"], p["role"])
                attrs.add(triple) if op == "add" else attrs.discard(triple)
            elif comp == "join_pairs":
                pair = frozenset(p["value"])
                joins.add(pair) if op == "add" else joins.discard(pair)
            elif comp == "comparison_attrs":
                duo = (p["attribute"], p["relation"])
                comparison_attrs.add(duo) if op == "add" else comparison_attrs.discard(duo)
            elif comp == "aggregates":
                duo = (p["function"], p["attribute"])
                aggs.add(duo) if op == "add" else aggs.discard(duo)
            elif comp == "has_subquery":
                has_subquery = bool(p["value"])

    for a, r, _op, _c in preds:
        attrs.add((a, r, "where"))
    for a, r in comparison_attrs:
        attrs.add((a, r, "where"))
    return FeatureSet(
        data_sources=frozenset(sources),
        attributes=frozenset(attrs),
        predicates=frozenset(preds),
        join_pairs=frozenset(joins),
        aggregates=frozenset(aggs),
        comparison_attrs=frozenset(comparison_attrs),
        has_subquery=has_subquery,
    )


def script_to_json(script: tuple) -> list:
    return [e.to_json() for e in script]


def script_from_json(body) -> tuple:
    return tuple(Edit.from_json(e) for e in body or ())


def script_labels(script: tuple) -> list[str]:
    return [e.label() for e in script]
