"""Log mining: sessions, association rules, clusters, and the suggestion
model built from them.

Everything here is derived state. Session assignments and edges are written
back to the store as events (idempotently: re-running emits only deltas);
the suggestion model is an immutable snapshot handed to whoever serves
completions, swapped atomically by the caller.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .errors import NotFound
from .sql.canon import PARAM
from .sql.diff import diff_features
from .sql.features import FeatureSet, SimilarityWeights, similarity
from .store import (
    MODIFICATION,
    TEMPORAL,
    EdgeAdded,
    Principal,
    QueryStore,
    SessionAssigned,
)


@dataclass(frozen=True, slots=True)
class MinerConfig:
    session_gap_ms: int = 600000  # 10 minutes of silence ends a session
    session_sim_threshold: float = 0.3
    min_support: float = 0.05
    min_confidence: float = 0.5
    cluster_link_threshold: float = 0.6
    model_version: str = "1"


# --- session segmentation ---


@dataclass
class MiningReport:
    sessions_assigned: int = 0
    edges_added: int = 0
    sessions_total: int = 0
    rules_mined: int = 0
    clusters: int = 0
    model_version: str = ""

    def to_json(self) -> dict:
        return {
            "sessions_assigned": self.sessions_assigned,
            "edges_added": self.edges_added,
            "sessions_total": self.sessions_total,
            "rules_mined": self.rules_mined,
            "clusters": self.clusters,
            "model_version": self.model_version,
        }


def segment_sessions(store: QueryStore, config: MinerConfig | None = None) -> MiningReport:
    """Split each user's history into sessions and link consecutive steps.

    Two consecutive queries by the same user share a session when they are
    close in time and structurally similar. Within a session each step gets
    an edge to the next: a modification edge carrying the edit script when
    the queries differ, a temporal edge when they are identical. Re-running
    over an unchanged store writes nothing.
    """
    config = config or MinerConfig()
    report = MiningReport()
    by_user: dict[str, list] = {}
    for qid, rec in store.queries.items():
        if rec.validity == "deleted":
            continue
        by_user.setdefault(rec.owner, []).append((rec.submitted_at, qid))
    for user in sorted(by_user):
        timeline = sorted(by_user[user])
        n = 0
        prev_qid = None
        for i, (_at, qid) in enumerate(timeline):
            rec = store.queries[qid]
            if prev_qid is not None:
                prev = store.queries[prev_qid]
                gap = rec.submitted_at - prev.submitted_at
                sim = similarity(prev.features, rec.features)
                if gap > config.session_gap_ms or sim < config.session_sim_threshold:
                    n += 1
                    prev_qid = None
            session_id = "%s:%d" % (user, n)
            if rec.session_id != session_id:
                store.append(SessionAssigned(qid=qid, session_id=session_id))
                report.sessions_assigned += 1
            if prev_qid is not None:
                prev = store.queries[prev_qid]
                script = diff_features(prev.features, rec.features)
                etype = MODIFICATION if script else TEMPORAL
                existing = store.edges.get((prev_qid, qid))
                if (
                    existing is None
                    or existing.edge_type != etype
                    or existing.edit_script != tuple(script)
                ):
                    store.append(
                        EdgeAdded(
                            from_qid=prev_qid,
                            to_qid=qid,
                            edge_type=etype,
                            edit_script=tuple(script),
                        )
                    )
                    report.edges_added += 1
            prev_qid = qid
        if timeline:
            n += 1
        report.sessions_total += n
    return report


def sessions_of(store: QueryStore, user: str, principal: Principal) -> list:
    """Session views for one user, oldest first, visibility-filtered."""
    groups: dict[str, list] = {}
    for qid, rec in store.queries.items():
        if rec.owner != user or rec.session_id is None:
            continue
        if not store.visible_rec(rec, principal):
            continue
        groups.setdefault(rec.session_id, []).append((rec.submitted_at, qid))
    out = []
    for sid in sorted(groups, key=lambda s: int(s.rsplit(":", 1)[1])):
        qids = [qid for _at, qid in sorted(groups[sid])]
        edges = []
        for a, b in zip(qids, qids[1:]):
            edge = store.edges.get((a, b))
            if edge is not None:
                edges.append(edge)
        out.append({"session_id": sid, "qids": qids, "edges": edges})
    return out


# --- frequent itemsets and association rules ---


@dataclass(frozen=True, slots=True)
class Rule:
    antecedent: tuple  # sorted feature items
    consequent: str
    support: float
    confidence: float

    def to_json(self) -> dict:
        return {
            "antecedent": list(self.antecedent),
            "consequent": self.consequent,
            "support": self.support,
            "confidence": self.confidence,
        }

    @classmethod
    def from_json(cls, body: dict) -> "Rule":
        return cls(
            antecedent=tuple(body["antecedent"]),
            consequent=body["consequent"],
            support=float(body["support"]),
            confidence=float(body["confidence"]),
        )


def apriori(itemsets: list, min_support: float, min_confidence: float) -> list:
    """Level-wise frequent-itemset mining with single-item consequents.

    Support is the fraction of input itemsets containing the whole set;
    confidence is support(itemset) / support(antecedent) computed on raw
    counts so equal inputs give bit-identical rule lists.
    """
    n = len(itemsets)
    if n == 0:
        return []
    # identical itemsets are counted once with a weight; workloads repeat
    # the same shapes heavily, so this is what keeps large logs cheap
    weighted = Counter(frozenset(s) for s in itemsets)
    min_count = max(1, math.ceil(min_support * n))
    counts: Counter = Counter()
    for s, w in weighted.items():
        for item in s:
            counts[item] += w
    level = {frozenset([i]): c for i, c in counts.items() if c >= min_count}
    frequent = dict(level)
    k = 2
    while level:
        keys = sorted(level, key=sorted)
        candidates = set()
        for i in range(len(keys)):
            for j in range(i + 1, len(keys)):
                union = keys[i] | keys[j]
                if len(union) != k:
                    continue
                if all(union - {x} in level for x in union):
                    candidates.add(union)
        next_level = {}
        if candidates:
            cand_list = list(candidates)
            tallies = [0] * len(cand_list)
            for s, w in weighted.items():
                for idx, c in enumerate(cand_list):
                    if c <= s:
                        tallies[idx] += w
            next_level = {
                c: t for c, t in zip(cand_list, tallies) if t >= min_count
            }
        frequent.update(next_level)
        level = next_level
        k += 1
    rules = []
    for iset, count in frequent.items():
        if len(iset) < 2:
            continue
        for consequent in iset:
            antecedent = iset - {consequent}
            ant_count = frequent.get(antecedent)
            if not ant_count:
                continue
            confidence = count / ant_count
            if confidence >= min_confidence:
                rules.append(
                    Rule(
                        antecedent=tuple(sorted(antecedent)),
                        consequent=consequent,
                        support=count / n,
                        confidence=confidence,
                    )
                )
    rules.sort(key=lambda r: (-r.support, r.antecedent, r.consequent))
    return rules


# --- clustering ---


def _template_rep(fs: FeatureSet) -> FeatureSet:
    preds = frozenset((a, r, op, PARAM) for a, r, op, _c in fs.predicates)
    return FeatureSet(
        data_sources=fs.data_sources,
        attributes=fs.attributes,
        predicates=preds,
        join_pairs=fs.join_pairs,
        aggregates=fs.aggregates,
        comparison_attrs=fs.comparison_attrs,
        has_subquery=fs.has_subquery,
    )


def cluster_queries(
    store: QueryStore,
    threshold: float | None = None,
    weights: SimilarityWeights | None = None,
) -> dict:
    """Group logged queries into clusters of structurally similar work.

    Queries sharing a template are grouped up front; the groups are then
    merged bottom-up whenever any two clusters contain representatives at
    least `threshold` similar (single linkage). Returns qid -> cluster id,
    where a cluster is named by its smallest member qid. Cached per store
    state, keyed by the event sequence number.
    """
    if threshold is None:
        threshold = MinerConfig().cluster_link_threshold
    cache = getattr(store, "_cluster_cache", None)
    key = (store.seq, threshold)
    if cache is not None and cache[0] == key:
        return cache[1]
    groups: dict[object, list] = {}
    reps: dict[object, FeatureSet] = {}
    for qid, rec in store.queries.items():
        if rec.validity == "deleted":
            continue
        gkey = rec.template_text if rec.template_text is not None else ("raw", qid)
        groups.setdefault(gkey, []).append(qid)
        if gkey not in reps:
            reps[gkey] = _template_rep(rec.features)
    gkeys = sorted(groups, key=str)
    pair_sim: dict = {}
    for i in range(len(gkeys)):
        for j in range(i + 1, len(gkeys)):
            pair_sim[(gkeys[i], gkeys[j])] = similarity(
                reps[gkeys[i]], reps[gkeys[j]], weights
            )

    def link(a, b) -> float:
        return pair_sim[(a, b)] if (a, b) in pair_sim else pair_sim[(b, a)]

    cluster_members: list = [[gkey] for gkey in gkeys]
    merged = True
    while merged and len(cluster_members) > 1:
        merged = False
        outer = None
        for i in range(len(cluster_members)):
            for j in range(i + 1, len(cluster_members)):
                best = max(
                    (link(a, b) for a in cluster_members[i] for b in cluster_members[j]),
                    default=0.0,
                )
                if best >= threshold:
                    outer = (i, j)
                    break
            if outer:
                break
        if outer:
            i, j = outer
            cluster_members[i].extend(cluster_members.pop(j))
            merged = True
    assignment: dict = {}
    for members in cluster_members:
        qids = sorted(q for gkey in members for q in groups[gkey])
        label = qids[0]
        for q in qids:
            assignment[q] = label
    store._cluster_cache = (key, assignment)
    return assignment


# --- suggestion model ---


@dataclass(frozen=True)
class SuggestionModel:
    version: str
    built_at: int
    built_seq: int
    query_count: int
    item_counts: dict
    pair_counts: dict  # (item_a, item_b) sorted tuple -> count
    rules: tuple
    schema_relations: dict  # relation -> tuple of attribute names

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "built_at": self.built_at,
            "built_seq": self.built_seq,
            "query_count": self.query_count,
            "item_counts": dict(sorted(self.item_counts.items())),
            "pair_counts": {"%s|%s" % k: v for k, v in sorted(self.pair_counts.items())},
            "rules": [r.to_json() for r in self.rules],
            "schema_relations": {
                r: list(attrs) for r, attrs in sorted(self.schema_relations.items())
            },
        }


EMPTY_MODEL = SuggestionModel(
    version="0",
    built_at=0,
    built_seq=0,
    query_count=0,
    item_counts={},
    pair_counts={},
    rules=(),
    schema_relations={},
)


def build_model(store: QueryStore, config: MinerConfig | None = None) -> SuggestionModel:
    config = config or MinerConfig()
    itemsets = []
    for rec in store.queries.values():
        if rec.validity == "deleted" or not rec.parsed:
            continue
        items = rec.features.items()
        if items:
            itemsets.append(items)
    item_counts: Counter = Counter()
    pair_counts: Counter = Counter()
    for items, weight in Counter(itemsets).items():
        for i in items:
            item_counts[i] += weight
        ordered = sorted(items)
        for x in range(len(ordered)):
            for y in range(x + 1, len(ordered)):
                pair_counts[(ordered[x], ordered[y])] += weight
    rules = apriori(itemsets, config.min_support, config.min_confidence)
    schema = store.schema_or_none()
    schema_relations = {}
    if schema is not None:
        schema_relations = {
            r: tuple(a for a, _t in cols) for r, cols in schema.relations.items()
        }
    from .store import now_ms

    return SuggestionModel(
        version=config.model_version,
        built_at=now_ms(),
        built_seq=store.seq,
        query_count=len(itemsets),
        item_counts=dict(item_counts),
        pair_counts=dict(pair_counts),
        rules=tuple(rules),
        schema_relations=schema_relations,
    )


def mine(store: QueryStore, config: MinerConfig | None = None):
    """Full pass: sessions, edges, clusters, fresh suggestion model."""
    config = config or MinerConfig()
    report = segment_sessions(store, config)
    model = build_model(store, config)
    clusters = cluster_queries(store, config.cluster_link_threshold)
    report.rules_mined = len(model.rules)
    report.clusters = len(set(clusters.values()))
    report.model_version = model.version
    return report, model


# --- completions ---


@dataclass(frozen=True, slots=True)
class Completion:
    name: str
    kind: str  # "relation" | "attribute"
    score: float
    tier: int

    def to_json(self) -> dict:
        return {"name": self.name, "kind": self.kind, "score": self.score, "tier": self.tier}


def _surface(item: str):
    """Map a feature item to a suggestable name, or None."""
    if item.startswith("src:"):
        return ("relation", item[4:])
    if item.startswith("attr:"):
        name = item[5:].split("@", 1)[0]
        return ("attribute", name)
    return None


def split_prefix(text: str):
    """Separate a trailing half-typed identifier from the stable context."""
    from .sql.lex import KEYWORDS

    if not text or not text[-1].isalnum() and text[-1] != "_":
        return text, ""
    i = len(text)
    while i > 0 and (text[i - 1].isalnum() or text[i - 1] == "_"):
        i -= 1
    word = text[i:]
    if not word or word[0].isdigit() or word.upper() in KEYWORDS:
        return text, ""
    return text[:i], word.lower()


def _context_items(context: str, model: SuggestionModel) -> frozenset:
    context = context.strip()
    if not context:
        return frozenset()
    from .errors import SqlSyntaxError, UnsupportedFeature
    from .sql import canonicalize, extract_features, parse

    # resolve against the schema the model was built with, so context items
    # line up with the item vocabulary in its counts
    attr_map = {r: set(attrs) for r, attrs in model.schema_relations.items()} or None
    try:
        features = extract_features(canonicalize(parse(context)), attr_map)
    except (SqlSyntaxError, UnsupportedFeature):
        return frozenset()
    return features.items()


def suggest_completions(
    model: SuggestionModel, text: str, limit: int = 10
) -> list:
    """Ranked name completions for an in-progress query.

    Candidates come from four tiers, strongest evidence first: association
    rules fired by the context, co-occurrence conditioned on context items,
    global popularity, and finally bare schema names. Within a tier higher
    score wins; the trailing half-typed word filters by prefix; names the
    context already uses are excluded.
    """
    context, prefix = split_prefix(text or "")
    ctx_items = _context_items(context, model)
    taken_relations = {i[4:] for i in ctx_items if i.startswith("src:")}
    taken_attrs = {i[5:].split("@", 1)[0] for i in ctx_items if i.startswith("attr:")}

    picked: dict = {}  # (kind, name) -> Completion

    def offer(item: str, score: float, tier: int):
        surf = _surface(item)
        if surf is None:
            return
        kind, name = surf
        if kind == "relation" and name in taken_relations:
            return
        if kind == "attribute" and name in taken_attrs:
            return
        if prefix and not name.startswith(prefix):
            return
        key = (kind, name)
        prev = picked.get(key)
        if prev is None or (tier, -score) < (prev.tier, -prev.score):
            picked[key] = Completion(name=name, kind=kind, score=score, tier=tier)

    if ctx_items:
        for rule in model.rules:
            if set(rule.antecedent) <= ctx_items and rule.consequent not in ctx_items:
                offer(rule.consequent, rule.confidence, 1)
        for ctx in ctx_items:
            base = model.item_counts.get(ctx, 0)
            if not base:
                continue
            for (a, b), count in model.pair_counts.items():
                other = b if a == ctx else a if b == ctx else None
                if other is None or other in ctx_items:
                    continue
                offer(other, count / base, 2)
    if model.query_count:
        for item, count in model.item_counts.items():
            if item in ctx_items:
                continue
            offer(item, count / model.query_count, 3)
    for rel, attrs in model.schema_relations.items():
        offer("src:%s" % rel, 0.0, 4)
        for a in attrs:
            offer("attr:%s@%s" % (a, rel), 0.0, 4)

    out = sorted(picked.values(), key=lambda c: (c.tier, -c.score, c.name))
    return out[:limit]


# --- corrections ---


@dataclass(frozen=True, slots=True)
class Correction:
    kind: str  # "identifier" | "predicate"
    original: str
    suggestion: str
    score: float

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "original": self.original,
            "suggestion": self.suggestion,
            "score": self.score,
        }


def edit_distance(a: str, b: str, cap: int = 3) -> int:
    if a == b:
        return 0
    if abs(len(a) - len(b)) > cap:
        return cap + 1
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        best = i
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            v = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
            cur.append(v)
            best = min(best, v)
        if best > cap:
            return cap + 1
        prev = cur
    return prev[-1]


def _distance_budget(name: str) -> int:
    return 1 if len(name) <= 4 else 2


def _name_popularity(model: SuggestionModel, kind: str, name: str) -> int:
    if kind == "relation":
        return model.item_counts.get("src:%s" % name, 0)
    return sum(
        c for item, c in model.item_counts.items()
        if item.startswith("attr:%s@" % name)
    )


def _const_text(const) -> str:
    if const is PARAM:
        return "?"
    if isinstance(const, str):
        return "'%s'" % const.replace("'", "''")
    if isinstance(const, bool):
        return "TRUE" if const else "FALSE"
    return str(const)


def _pred_text(attr: str, op: str, const) -> str:
    if op == "between" and isinstance(const, tuple) and len(const) == 2:
        return "%s BETWEEN %s AND %s" % (attr, _const_text(const[0]), _const_text(const[1]))
    if op == "in" and isinstance(const, tuple):
        return "%s IN (%s)" % (attr, ", ".join(_const_text(c) for c in const))
    if op == "like":
        return "%s LIKE %s" % (attr, _const_text(const))
    return "%s %s %s" % (attr, op, _const_text(const))


def suggest_corrections(
    store: QueryStore,
    model: SuggestionModel,
    text: str,
    result_cardinality: int | None = None,
) -> list:
    """Fixes for a query that failed to resolve or came back empty.

    Unknown relation or attribute names draw nearby known names (edit
    distance scaled to the identifier length). A zero-row result draws
    alternative predicates on the same attributes from logged queries that
    did return data.
    """
    from .profiler import analyze, validity_reasons

    out = []
    schema = store.schema_or_none()
    analysis = analyze(text.strip(), schema)
    if not analysis.parsed:
        return out
    if schema is not None:
        attr_map = schema.attr_map()
        for reason in validity_reasons(analysis.features, schema):
            if reason.startswith("missing-relation("):
                bad = reason[len("missing-relation("):-1]
                pool = [("relation", r) for r in attr_map]
            else:
                bad = reason[len("missing-attribute("):-1].split("@", 1)[0]
                rel = reason[len("missing-attribute("):-1].split("@", 1)[1]
                if rel in attr_map:
                    pool = [("attribute", a) for a in attr_map[rel]]
                else:
                    pool = [("attribute", a) for attrs in attr_map.values() for a in attrs]
            budget = _distance_budget(bad)
            scored = []
            for kind, cand in set(pool):
                dist = edit_distance(bad, cand, cap=budget)
                if 0 < dist <= budget:
                    scored.append((dist, -_name_popularity(model, kind, cand), cand, kind))
            for dist, negpop, cand, kind in sorted(scored):
                out.append(
                    Correction(
                        kind="identifier",
                        original=bad,
                        suggestion=cand,
                        score=1.0 / (1.0 + dist),
                    )
                )
    if result_cardinality == 0 and analysis.features.predicates:
        alternatives: Counter = Counter()
        for rec in store.queries.values():
            if rec.validity == "deleted" or not rec.parsed:
                continue
            if rec.result_cardinality is None or rec.result_cardinality <= 0:
                continue
            for a, r, op, const in rec.features.predicates:
                alternatives[(a, op, const)] += 1
        for a, _r, op, const in sorted(
            analysis.features.predicates, key=lambda p: (p[0], p[2])
        ):
            original = _pred_text(a, op, const)
            ranked = [
                ((cand_op, cand_const), count)
                for (cand_a, cand_op, cand_const), count in alternatives.items()
                if cand_a == a and (cand_op, cand_const) != (op, const)
            ]
            if not ranked:
                continue
            top = max(c for _k, c in ranked)
            ranked.sort(key=lambda kv: (-kv[1], _pred_text(a, kv[0][0], kv[0][1])))
            for (cand_op, cand_const), count in ranked[:3]:
                out.append(
                    Correction(
                        kind="predicate",
                        original=original,
                        suggestion=_pred_text(a, cand_op, cand_const),
                        score=count / top,
                    )
                )
    return out


# --- recommendations ---


def merge_features(sets) -> FeatureSet:
    merged = FeatureSet()
    for fs in sets:
        merged = FeatureSet(
            data_sources=merged.data_sources | fs.data_sources,
            attributes=merged.attributes | fs.attributes,
            predicates=merged.predicates | fs.predicates,
            join_pairs=merged.join_pairs | fs.join_pairs,
            aggregates=merged.aggregates | fs.aggregates,
            comparison_attrs=merged.comparison_attrs | fs.comparison_attrs,
            has_subquery=merged.has_subquery or fs.has_subquery,
        )
    return merged


def recommend_queries(
    store: QueryStore,
    principal: Principal,
    base_qids,
    k: int = 5,
    config: MinerConfig | None = None,
    now: int | None = None,
) -> list:
    """Visible queries worth a look, given what someone just worked on.

    The base queries' features are merged into one target; candidates are
    scored by similarity to it, blended with desirability via rank(), the
    inputs themselves dropped, and near-duplicates collapsed to one
    representative per cluster.
    """
    from .metaquery import Executor, Knn, rank

    config = config or MinerConfig()
    base = []
    for qid in base_qids:
        rec = store.queries.get(int(qid))
        if rec is None or not store.visible_rec(rec, principal):
            raise NotFound("no query %s" % qid)
        base.append(rec.features)
    target = merge_features(base)
    ex = Executor(store)
    matches = ex.execute(Knn(k=len(store.queries) or 1, features=target), principal)
    base_set = {int(q) for q in base_qids}
    matches = [m for m in matches if m.qid not in base_set]
    ranked = rank(store, matches, now=now)
    clusters = cluster_queries(store, config.cluster_link_threshold)
    seen = set()
    out = []
    for r in ranked:
        label = clusters.get(r.qid, r.qid)
        if label in seen:
            continue
        seen.add(label)
        out.append(r)
        if len(out) >= k:
            break
    return out
