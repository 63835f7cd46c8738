"""Intake pipeline: turn raw submitted queries into stored log records.

Each incoming query is analyzed once (parse, canonicalize, feature
extraction), its result set is boiled down to a bounded summary, and the
whole thing is appended to the store as a single event. Queries that fall
outside the SQL subset are still logged, as raw text with parsed=False, so
the log stays complete even when analysis cannot keep up with the dialect.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace

from .errors import EmptyQuery, SqlSyntaxError, UnsupportedFeature
from .sql import canonicalize, extract_features, parse, render, template
from .sql.features import EMPTY_FEATURES, UNRESOLVED, FeatureSet
from .store import (
    FLAGGED_SCHEMA,
    FULL,
    SAMPLE,
    VALID,
    OutputSummary,
    QueryAdded,
    QueryStore,
    SchemaSnapshot,
    now_ms,
)


@dataclass(frozen=True, slots=True)
class ProfilerConfig:
    # summary budget: rows retained grow with how long the query ran,
    # clamped so cheap queries still keep a floor and monsters stay bounded
    base_rows_per_second: int = 64
    min_budget_rows: int = 10
    max_budget_rows: int = 10000
    rng_seed: int = 90125


@dataclass(frozen=True, slots=True)
class RawQuery:
    """One submission as it arrives from a client or a replayed DBMS log."""

    text: str
    user: str
    groups: tuple = ()
    submitted_at: int | None = None
    execution_ms: int = 0
    result_cardinality: int | None = None
    output: object = None  # iterable of row tuples, or None
    columns: tuple = ()


@dataclass(frozen=True, slots=True)
class Analysis:
    canonical_text: str
    template_text: str | None
    features: FeatureSet
    parsed: bool
    error: str | None = None


@dataclass
class IngestReport:
    added: list = field(default_factory=list)
    errors: list = field(default_factory=list)  # (line number, message)

    def to_json(self) -> dict:
        return {
            "added": [str(q) for q in self.added],
            "errors": [{"line": n, "error": m} for n, m in self.errors],
        }


_ANALYSIS_CACHE: dict[tuple, Analysis] = {}
_ANALYSIS_CACHE_CAP = 100000


def analyze(text: str, schema: SchemaSnapshot | None = None) -> Analysis:
    """Parse and canonicalize once; repeated texts hit a cache.

    The cache key includes the schema's content fingerprint because
    attribute resolution (and hence the extracted features) depends on
    which relations exist; timestamps do not identify that.
    """
    key = (text, schema.fingerprint if schema is not None else None)
    hit = _ANALYSIS_CACHE.get(key)
    if hit is not None:
        return hit
    attr_map = schema.attr_map() if schema is not None else None
    try:
        tree = canonicalize(parse(text))
        canonical_text = render(tree)
        template_text = render(template(tree))
        features = extract_features(tree, attr_map)
        result = Analysis(canonical_text, template_text, features, parsed=True)
    except (SqlSyntaxError, UnsupportedFeature) as exc:
        result = Analysis(
            canonical_text=" ".join(text.split()),
            template_text=None,
            features=EMPTY_FEATURES,
            parsed=False,
            error=str(exc),
        )
    if len(_ANALYSIS_CACHE) >= _ANALYSIS_CACHE_CAP:
        _ANALYSIS_CACHE.clear()
    _ANALYSIS_CACHE[key] = result
    return result


def budget_rows(execution_ms: int, config: ProfilerConfig) -> int:
    raw = int(config.base_rows_per_second * max(execution_ms, 0) / 1000)
    return max(config.min_budget_rows, min(config.max_budget_rows, raw))


def summarize_output(
    rows, columns, execution_ms: int, config: ProfilerConfig | None = None
) -> OutputSummary:
    """Single-pass bounded copy of a result stream.

    Keeps everything when the stream fits the budget, otherwise a uniform
    reservoir sample of exactly budget rows. Deterministic for a fixed seed
    and input order.
    """
    config = config or ProfilerConfig()
    budget = budget_rows(execution_ms, config)
    rng = random.Random(config.rng_seed)
    reservoir: list = []
    n = 0
    for row in rows:
        n += 1
        if len(reservoir) < budget:
            reservoir.append(tuple(row))
        else:
            j = rng.randrange(n)
            if j < budget:
                reservoir[j] = tuple(row)
    mode = FULL if n <= budget else SAMPLE
    return OutputSummary(
        mode=mode,
        columns=tuple(columns),
        tuples=tuple(reservoir),
        source_cardinality=n,
        budget_rows=budget,
        rng_seed=config.rng_seed,
    )


def validity_reasons(features: FeatureSet, schema: SchemaSnapshot) -> tuple:
    """Why a query does not fit the given schema; empty means it fits.

    Only definite mismatches are reported: an attribute whose relation
    could not be resolved is flagged only when every referenced relation is
    known to the schema and none of them carries it.
    """
    attr_map = schema.attr_map()
    reasons = set()
    for r in features.data_sources:
        if r != UNRESOLVED and r not in attr_map:
            reasons.add("missing-relation(%s)" % r)
    known = [r for r in features.data_sources if r in attr_map]
    all_known = bool(features.data_sources) and not any(
        r != UNRESOLVED and r not in attr_map for r in features.data_sources
    )
    for a, r, _role in features.attributes:
        if a == "*":
            continue
        if r != UNRESOLVED:
            if r in attr_map and a not in attr_map[r]:
                reasons.add("missing-attribute(%s@%s)" % (a, r))
        elif all_known and not any(a in attr_map[s] for s in known):
            reasons.add("missing-attribute(%s@?)" % a)
    return tuple(sorted(reasons))


def ingest(store: QueryStore, raw: RawQuery, config: ProfilerConfig | None = None) -> int:
    """Profile one query and append it to the log. Returns its qid."""
    config = config or ProfilerConfig()
    text = raw.text.strip()
    if not text:
        raise EmptyQuery("empty query text")
    schema = store.schema_or_none()
    analysis = analyze(text, schema)
    summary_ref = None
    cardinality = raw.result_cardinality
    if raw.output is not None:
        summary = summarize_output(raw.output, raw.columns, raw.execution_ms, config)
        summary_ref = store.put_summary(summary)
        if cardinality is None:
            cardinality = summary.source_cardinality
    validity, reasons = VALID, ()
    if analysis.parsed and schema is not None:
        reasons = validity_reasons(analysis.features, schema)
        if reasons:
            validity = FLAGGED_SCHEMA
    event = QueryAdded(
        raw_text=text,
        canonical_text=analysis.canonical_text,
        template_text=analysis.template_text,
        features=analysis.features,
        parsed=analysis.parsed,
        owner=raw.user,
        groups=tuple(raw.groups),
        submitted_at=raw.submitted_at if raw.submitted_at is not None else now_ms(),
        execution_ms=raw.execution_ms,
        result_cardinality=cardinality,
        summary_ref=summary_ref,
        validity=validity,
        flag_reasons=reasons,
    )
    applied = store.append(event)
    return applied.qid


def raw_from_json(body: dict) -> RawQuery:
    output = body.get("output")
    return RawQuery(
        text=body.get("query", ""),
        user=body.get("user", ""),
        groups=tuple(body.get("groups", ())),
        submitted_at=body.get("ts"),
        execution_ms=int(body.get("exec_ms", 0)),
        result_cardinality=body.get("rows_out"),
        output=[tuple(r) for r in output] if output is not None else None,
        columns=tuple(body.get("columns", ())),
    )


def ingest_batch(
    store: QueryStore,
    items,
    config: ProfilerConfig | None = None,
    default_user: str = "",
    default_groups=(),
) -> IngestReport:
    """Ingest many records, collecting per-line failures instead of stopping.

    items may mix raw NDJSON lines, decoded dicts, and RawQuery values; blank
    lines are skipped. Error positions are 1-based line numbers.
    """
    report = IngestReport()
    for line_no, item in enumerate(items, start=1):
        try:
            if isinstance(item, (str, bytes)):
                stripped = item.strip()
                if not stripped:
                    continue
                item = json.loads(stripped)
            raw = item if isinstance(item, RawQuery) else raw_from_json(item)
            if not raw.user:
                if not default_user:
                    raise EmptyQuery("missing user")
                raw = replace(raw, user=default_user)
            if not raw.groups and default_groups:
                raw = replace(raw, groups=tuple(sorted(default_groups)))
            report.added.append(ingest(store, raw, config))
        except Exception as exc:  # noqa: BLE001 - batch surface reports, not raises
            report.errors.append((line_no, str(exc)))
    return report
