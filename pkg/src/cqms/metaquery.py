"""Queries about queries.

A meta-query selects records from the log itself. Five shapes are
supported: keyword search over canonical text and annotations, raw-text
substring scan, structural conditions over extracted features (with and/or/
not composition evaluated as set algebra over the store indexes), matching
by example output rows, and nearest-neighbor retrieval by feature
similarity. Matches carry a certainty: "definite" when the store can prove
the answer, "possible" when a sampled or missing output summary leaves room
for doubt.
"""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field

from .errors import InvalidMetaQuery, InvalidWeights, NotFound
from .sql import canonicalize, extract_features, parse, render
from .sql.canon import PARAM, const_sort_key
from .sql.features import FeatureSet, SimilarityWeights, UNRESOLVED, similarity
from .store import FULL, Principal, QueryStore

DEFINITE = "definite"
POSSIBLE = "possible"

_WORD = re.compile(r"\w+")


def _tokens(text: str) -> frozenset:
    return frozenset(w.lower() for w in _WORD.findall(text))


@dataclass(frozen=True, slots=True)
class MatchResult:
    qid: int
    score: float
    certainty: str = DEFINITE

    def sort_key(self):
        return (0 if self.certainty == DEFINITE else 1, -self.score, self.qid)

    def to_json(self) -> dict:
        return {"qid": str(self.qid), "score": self.score, "certainty": self.certainty}


# --- feature condition atoms ---


class Atom:
    """Base for structural conditions; subclasses implement candidates()."""

    def leaves(self):
        yield self

    def candidates(self, ex: "Executor", universe: frozenset) -> set:
        raise NotImplementedError

    def cached(self, ex: "Executor", universe: frozenset) -> set:
        # atoms are frozen and hashable; one evaluation per execute() even
        # when the same leaf is consulted again for scoring
        memo = ex._memo
        got = memo.get(self)
        if got is None:
            got = self.candidates(ex, universe)
            memo[self] = got
        return got


@dataclass(frozen=True)
class ReferencesRelation(Atom):
    relation: str

    def candidates(self, ex, universe):
        return ex.store.by_relation.get(self.relation.lower(), set()) & universe


@dataclass(frozen=True)
class HasAttribute(Atom):
    attr: str
    relation: str | None = None
    role: str | None = None

    def candidates(self, ex, universe):
        base = ex.store.by_attr.get(self.attr.lower(), set()) & universe
        if self.relation is None and self.role is None:
            return set(base)
        want_rel = self.relation.lower() if self.relation else None
        out = set()
        for qid in base:
            for a, r, role in ex.store.queries[qid].features.attributes:
                if a != self.attr.lower():
                    continue
                if want_rel is not None and r != want_rel:
                    continue
                if self.role is not None and role != self.role:
                    continue
                out.add(qid)
                break
        return out


@dataclass(frozen=True)
class HasPredicate(Atom):
    attr: str
    relation: str | None = None
    op: str | None = None
    const_min: object = None
    const_max: object = None

    def candidates(self, ex, universe):
        base = ex.store.by_pred_attr.get(self.attr.lower(), set()) & universe
        out = set()
        want_rel = self.relation.lower() if self.relation else None
        lo = const_sort_key(self.const_min) if self.const_min is not None else None
        hi = const_sort_key(self.const_max) if self.const_max is not None else None
        for qid in base:
            for a, r, op, const in ex.store.queries[qid].features.predicates:
                if a != self.attr.lower():
                    continue
                if want_rel is not None and r != want_rel:
                    continue
                if self.op is not None and op != self.op:
                    continue
                if lo is not None or hi is not None:
                    if const is PARAM:
                        continue
                    key = const_sort_key(const)
                    if lo is not None and key < lo:
                        continue
                    if hi is not None and key > hi:
                        continue
                out.add(qid)
                break
        return out


@dataclass(frozen=True)
class Author(Atom):
    user: str

    def candidates(self, ex, universe):
        return ex.store.by_owner.get(self.user, set()) & universe


@dataclass(frozen=True)
class Range(Atom):
    """Numeric range over a runtime field: exec-ms, cardinality, submitted."""

    fieldname: str
    minimum: float | None = None
    maximum: float | None = None

    def _value(self, rec):
        if self.fieldname == "exec-ms":
            return rec.execution_ms
        if self.fieldname == "cardinality":
            return rec.result_cardinality
        return rec.submitted_at

    def candidates(self, ex, universe):
        out = set()
        for qid in universe:
            v = self._value(ex.store.queries[qid])
            if v is None:
                continue
            if self.minimum is not None and v < self.minimum:
                continue
            if self.maximum is not None and v > self.maximum:
                continue
            out.add(qid)
        return out


@dataclass(frozen=True)
class And(Atom):
    parts: tuple

    def leaves(self):
        for p in self.parts:
            yield from p.leaves()

    def candidates(self, ex, universe):
        if not self.parts:
            return set(universe)
        acc = None
        for p in self.parts:
            got = p.cached(ex, universe)
            acc = got if acc is None else acc & got
            if not acc:
                return set()
        return acc


@dataclass(frozen=True)
class Or(Atom):
    parts: tuple

    def leaves(self):
        for p in self.parts:
            yield from p.leaves()

    def candidates(self, ex, universe):
        acc: set = set()
        for p in self.parts:
            acc |= p.cached(ex, universe)
        return acc


@dataclass(frozen=True)
class Not(Atom):
    part: Atom

    def leaves(self):
        yield from self.part.leaves()

    def candidates(self, ex, universe):
        return set(universe) - self.part.cached(ex, universe)


# --- meta-query shapes ---


@dataclass(frozen=True)
class Keyword:
    tokens: tuple  # all must appear as whole words

    def validate(self):
        if not self.tokens:
            raise InvalidMetaQuery("keyword query needs at least one token")


@dataclass(frozen=True)
class Substring:
    text: str

    def validate(self):
        if not self.text:
            raise InvalidMetaQuery("substring query needs text")


@dataclass(frozen=True)
class FeatureCond:
    where: Atom

    def validate(self):
        if not isinstance(self.where, Atom):
            raise InvalidMetaQuery("feature query needs a condition")


@dataclass(frozen=True)
class DataCond:
    include: tuple = ()  # rows the output must contain
    exclude: tuple = ()  # rows the output must not contain
    columns: tuple = ()

    def validate(self):
        if not self.include and not self.exclude:
            raise InvalidMetaQuery("data query needs include or exclude rows")
        overlap = {tuple(r) for r in self.include} & {tuple(r) for r in self.exclude}
        if overlap:
            raise InvalidMetaQuery("include and exclude rows overlap")


@dataclass(frozen=True)
class Knn:
    k: int
    features: FeatureSet | None = None
    text: str | None = None
    qid: int | None = None
    weights: SimilarityWeights | None = None

    def validate(self):
        if self.k < 1:
            raise InvalidMetaQuery("k must be positive")
        if self.features is None and self.text is None and self.qid is None:
            raise InvalidMetaQuery("knn query needs features, text, or qid")


META_QUERY_TYPES = (Keyword, Substring, FeatureCond, DataCond, Knn)


# --- execution ---


class Executor:
    def __init__(self, store: QueryStore):
        self.store = store
        self._memo: dict = {}

    def visible_universe(self, principal: Principal) -> frozenset:
        store = self.store
        cache = getattr(store, "_universe_cache", None)
        if cache is None:
            cache = store._universe_cache = {}
        key = (principal.user, principal.groups)
        hit = cache.get(key)
        if hit is not None and hit[0] == store.seq:
            return hit[1]
        universe = frozenset(
            qid for qid, rec in store.queries.items() if store.visible_rec(rec, principal)
        )
        if len(cache) > 64:
            cache.clear()
        cache[key] = (store.seq, universe)
        return universe

    def execute(self, mq, principal: Principal, limit: int | None = None) -> list:
        mq.validate()
        self._memo = {}
        universe = self.visible_universe(principal)
        if isinstance(mq, Keyword):
            results = self._keyword(mq, universe)
        elif isinstance(mq, Substring):
            results = self._substring(mq, universe)
        elif isinstance(mq, FeatureCond):
            results = self._feature(mq, universe)
        elif isinstance(mq, DataCond):
            results = self._data(mq, universe)
        elif isinstance(mq, Knn):
            results = self._knn(mq, universe)
        else:
            raise InvalidMetaQuery("unknown meta-query type %r" % type(mq).__name__)
        results.sort(key=MatchResult.sort_key)
        if limit is not None:
            results = results[:limit]
        return results

    def _keyword(self, mq: Keyword, universe) -> list:
        want = frozenset(t.lower() for t in mq.tokens)
        out = []
        for qid in universe:
            rec = self.store.queries[qid]
            have = rec.text_tokens
            if not want <= have:
                extra = set()
                for ann in rec.annotations:
                    extra |= _tokens(ann.text)
                if not want <= (have | extra):
                    continue
            out.append(MatchResult(qid, 1.0, DEFINITE))
        return out

    def _substring(self, mq: Substring, universe) -> list:
        needle = mq.text.lower()
        return [
            MatchResult(qid, 1.0, DEFINITE)
            for qid in universe
            if needle in self.store.queries[qid].raw_text.lower()
        ]

    def _feature(self, mq: FeatureCond, universe) -> list:
        matched = mq.where.cached(self, universe)
        leaves = list(mq.where.leaves())
        leaf_sets = [leaf.cached(self, universe) for leaf in leaves]
        total = len(leaves) or 1
        out = []
        for qid in matched:
            hits = sum(1 for s in leaf_sets if qid in s)
            out.append(MatchResult(qid, hits / total, DEFINITE))
        return out

    def _data(self, mq: DataCond, universe) -> list:
        include = Counter(tuple(r) for r in mq.include)
        exclude = [tuple(r) for r in mq.exclude]
        want_cols = tuple(mq.columns)
        out = []
        for qid in universe:
            rec = self.store.queries[qid]
            if rec.summary_ref is None:
                out.append(MatchResult(qid, 1.0, POSSIBLE))
                continue
            summary = self.store.get_summary(rec.summary_ref)
            if summary is None:
                out.append(MatchResult(qid, 1.0, POSSIBLE))
                continue
            if want_cols and summary.columns and tuple(summary.columns) != want_cols:
                continue  # output shape cannot match
            have = Counter(summary.tuples)
            include_ok = all(have[row] >= n for row, n in include.items())
            exclude_hit = any(have[row] > 0 for row in exclude)
            if summary.mode == FULL:
                if include_ok and not exclude_hit:
                    out.append(MatchResult(qid, 1.0, DEFINITE))
                continue  # definite non-match drops out
            # sampled view: presence is proof, absence is not
            if exclude_hit:
                continue
            if include_ok and not exclude:
                out.append(MatchResult(qid, 1.0, DEFINITE))
            else:
                out.append(MatchResult(qid, 1.0, POSSIBLE))
        return out

    def _knn(self, mq: Knn, universe) -> list:
        target = mq.features
        if target is None and mq.qid is not None:
            # target must be visible: invisible and nonexistent look identical
            if mq.qid not in universe:
                raise NotFound("query %s" % mq.qid)
            target = self.store.queries[mq.qid].features
        if target is None and mq.text is not None:
            tree = canonicalize(parse(mq.text))
            schema = self.store.schema_or_none()
            target = extract_features(tree, schema.attr_map() if schema else None)
        weights = mq.weights or SimilarityWeights()
        scored = [
            MatchResult(qid, similarity(target, self.store.queries[qid].features, weights))
            for qid in universe
        ]
        scored.sort(key=MatchResult.sort_key)
        return scored[: mq.k]


# --- ranking ---


@dataclass(frozen=True, slots=True)
class RankWeights:
    similarity: float = 1.0
    popularity: float = 1.0
    recency: float = 1.0
    efficiency: float = 1.0
    small_result: float = 1.0

    def validate(self):
        vals = (self.similarity, self.popularity, self.recency, self.efficiency, self.small_result)
        if any(v < 0 for v in vals):
            raise InvalidWeights("rank weights must be non-negative")
        if not any(v > 0 for v in vals):
            raise InvalidWeights("at least one rank weight must be positive")
        return self

    @classmethod
    def from_json(cls, body: dict) -> "RankWeights":
        return cls(
            similarity=float(body.get("similarity", 1.0)),
            popularity=float(body.get("popularity", 1.0)),
            recency=float(body.get("recency", 1.0)),
            efficiency=float(body.get("efficiency", 1.0)),
            small_result=float(body.get("small_result", 1.0)),
        ).validate()


RECENCY_HALF_LIFE_MS = 30 * 86400 * 1000


@dataclass(frozen=True, slots=True)
class RankedQuery:
    qid: int
    score: float
    components: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"qid": str(self.qid), "score": self.score, "components": self.components}


def rank(
    store: QueryStore,
    candidates,
    weights: RankWeights | None = None,
    now: int | None = None,
) -> list:
    """Order candidate queries by a weighted blend of desirability signals.

    Candidates are (qid, similarity) pairs or bare qids (similarity 1.0).
    Popularity, efficiency, and small-result are normalized against the
    corpus maximum so every component lands in [0, 1]; ordering is invariant
    under positive rescaling of the weight vector.
    """
    weights = (weights or RankWeights()).validate()
    if now is None:
        from .store import now_ms

        now = now_ms()
    pairs = []
    for c in candidates:
        if isinstance(c, MatchResult):
            pairs.append((c.qid, c.score))
        elif isinstance(c, tuple):
            pairs.append((int(c[0]), float(c[1])))
        else:
            pairs.append((int(c), 1.0))

    max_pop = store.max_template_count()
    max_eff = 0.0
    max_small = 0.0
    for rec in store.queries.values():
        if rec.validity == "deleted":
            continue
        max_eff = max(max_eff, 1.0 / (1.0 + rec.execution_ms / 1000.0))
        if rec.result_cardinality is not None:
            max_small = max(max_small, 1.0 / (1.0 + rec.result_cardinality))

    total_w = (
        weights.similarity
        + weights.popularity
        + weights.recency
        + weights.efficiency
        + weights.small_result
    )
    out = []
    for qid, sim in pairs:
        rec = store.queries.get(qid)
        if rec is None or rec.validity == "deleted":
            continue
        pop = 0.0
        if max_pop and rec.template_text is not None:
            pop = store.template_counts.get(rec.template_text, 0) / max_pop
        age = max(0, now - rec.submitted_at)
        recency = math.pow(0.5, age / RECENCY_HALF_LIFE_MS)
        eff = (1.0 / (1.0 + rec.execution_ms / 1000.0)) / max_eff if max_eff else 0.0
        small = 0.0
        if max_small and rec.result_cardinality is not None:
            small = (1.0 / (1.0 + rec.result_cardinality)) / max_small
        components = {
            "similarity": sim,
            "popularity": pop,
            "recency": recency,
            "efficiency": eff,
            "small_result": small,
        }
        score = (
            weights.similarity * sim
            + weights.popularity * pop
            + weights.recency * recency
            + weights.efficiency * eff
            + weights.small_result * small
        ) / total_w
        out.append(RankedQuery(qid, score, components))
    out.sort(key=lambda r: (-r.score, r.qid))
    return out


# --- lifting a partial query into a structural condition ---


def from_partial(text: str, schema=None):
    """Interpret an in-progress query as a search over the log.

    Every relation already named becomes a references-relation condition and
    every completed predicate becomes a has-predicate condition pinned to its
    constant. Half-typed fragments contribute nothing, so suggestions get
    broader as less is written.
    """
    if not text or not text.strip():
        raise InvalidMetaQuery("nothing to interpret")
    tree = canonicalize(parse(text))
    attr_map = schema.attr_map() if schema is not None else None
    features = extract_features(tree, attr_map)
    parts = []
    for rel in sorted(features.data_sources):
        if rel != UNRESOLVED:
            parts.append(ReferencesRelation(rel))
    for attr, rel, op, const in sorted(features.predicates, key=lambda p: (p[0], p[1], p[2])):
        if const is PARAM:
            continue
        if isinstance(const, tuple) and any(c is PARAM for c in const):
            continue
        parts.append(
            HasPredicate(
                attr=attr,
                relation=rel if rel != UNRESOLVED else None,
                op=op,
                const_min=const,
                const_max=const,
            )
        )
    if not parts:
        raise InvalidMetaQuery("no recognizable structure in partial query")
    return FeatureCond(And(tuple(parts)))


# --- wire format ---


def _const_from_json(v):
    if isinstance(v, dict) and v.get("param"):
        return PARAM
    if isinstance(v, list):
        return tuple(_const_from_json(x) for x in v)
    return v


def _const_to_json(v):
    if v is PARAM:
        return {"param": True}
    if isinstance(v, tuple):
        return [_const_to_json(x) for x in v]
    return v


def atom_from_json(body) -> Atom:
    if not isinstance(body, dict) or len(body) != 1:
        raise InvalidMetaQuery("condition must be a single-key object")
    key, val = next(iter(body.items()))
    if key == "all":
        return And(tuple(atom_from_json(p) for p in val))
    if key == "any":
        return Or(tuple(atom_from_json(p) for p in val))
    if key == "not":
        return Not(atom_from_json(val))
    if key == "references-relation":
        return ReferencesRelation(str(val))
    if key == "has-attribute":
        return HasAttribute(
            attr=str(val["attr"]), relation=val.get("rel"), role=val.get("role")
        )
    if key == "has-predicate":
        return HasPredicate(
            attr=str(val["attr"]),
            relation=val.get("rel"),
            op=val.get("op"),
            const_min=_const_from_json(val["const_min"]) if "const_min" in val else None,
            const_max=_const_from_json(val["const_max"]) if "const_max" in val else None,
        )
    if key == "author":
        return Author(str(val))
    if key in ("exec-ms", "cardinality", "submitted"):
        return Range(fieldname=key, minimum=val.get("min"), maximum=val.get("max"))
    raise InvalidMetaQuery("unknown condition %r" % key)


def atom_to_json(atom: Atom):
    if isinstance(atom, And):
        return {"all": [atom_to_json(p) for p in atom.parts]}
    if isinstance(atom, Or):
        return {"any": [atom_to_json(p) for p in atom.parts]}
    if isinstance(atom, Not):
        return {"not": atom_to_json(atom.part)}
    if isinstance(atom, ReferencesRelation):
        return {"references-relation": atom.relation}
    if isinstance(atom, HasAttribute):
        body = {"attr": atom.attr}
        if atom.relation is not None:
            body["rel"] = atom.relation
        if atom.role is not None:
            body["role"] = atom.role
        return {"has-attribute": body}
    if isinstance(atom, HasPredicate):
        body = {"attr": atom.attr}
        if atom.relation is not None:
            body["rel"] = atom.relation
        if atom.op is not None:
            body["op"] = atom.op
        if atom.const_min is not None:
            body["const_min"] = _const_to_json(atom.const_min)
        if atom.const_max is not None:
            body["const_max"] = _const_to_json(atom.const_max)
        return {"has-predicate": body}
    if isinstance(atom, Author):
        return {"author": atom.user}
    if isinstance(atom, Range):
        body = {}
        if atom.minimum is not None:
            body["min"] = atom.minimum
        if atom.maximum is not None:
            body["max"] = atom.maximum
        return {atom.fieldname: body}
    raise InvalidMetaQuery("unknown atom %r" % type(atom).__name__)


def metaquery_from_json(body: dict):
    if not isinstance(body, dict):
        raise InvalidMetaQuery("meta-query must be an object")
    kind = body.get("type")
    if kind == "keyword":
        return Keyword(tuple(str(t) for t in body.get("tokens", ())))
    if kind == "substring":
        return Substring(str(body.get("text", "")))
    if kind == "feature":
        if "where" not in body:
            raise InvalidMetaQuery("feature query needs a where condition")
        return FeatureCond(atom_from_json(body["where"]))
    if kind == "data":
        return DataCond(
            include=tuple(tuple(r) for r in body.get("include", ())),
            exclude=tuple(tuple(r) for r in body.get("exclude", ())),
            columns=tuple(body.get("columns", ())),
        )
    if kind == "knn":
        features = body.get("features")
        qid = body.get("qid")
        weights = body.get("weights")
        return Knn(
            k=int(body.get("k", 10)),
            features=FeatureSet.from_json(features) if features is not None else None,
            text=body.get("text"),
            qid=int(qid) if qid is not None else None,
            weights=SimilarityWeights.from_json(weights) if weights is not None else None,
        )
    if kind == "partial":
        raise InvalidMetaQuery("partial queries are lifted via from_partial")
    raise InvalidMetaQuery("unknown meta-query type %r" % kind)


def metaquery_to_json(mq) -> dict:
    if isinstance(mq, Keyword):
        return {"type": "keyword", "tokens": list(mq.tokens)}
    if isinstance(mq, Substring):
        return {"type": "substring", "text": mq.text}
    if isinstance(mq, FeatureCond):
        return {"type": "feature", "where": atom_to_json(mq.where)}
    if isinstance(mq, DataCond):
        body = {"type": "data", "include": [list(r) for r in mq.include],
                "exclude": [list(r) for r in mq.exclude]}
        if mq.columns:
            body["columns"] = list(mq.columns)
        return body
    if isinstance(mq, Knn):
        body = {"type": "knn", "k": mq.k}
        if mq.features is not None:
            body["features"] = mq.features.to_json()
        if mq.text is not None:
            body["text"] = mq.text
        if mq.qid is not None:
            body["qid"] = str(mq.qid)
        if mq.weights is not None:
            body["weights"] = mq.weights.to_json()
        return body
    raise InvalidMetaQuery("unknown meta-query type %r" % type(mq).__name__)
