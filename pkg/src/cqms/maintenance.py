"""Log upkeep: schema validity, staleness, and quality scoring.

Schema changes never delete logged queries. A query that references
relations or attributes the current schema no longer has is flagged with
the reasons, and unflagged again if a later schema restores them. Queries
kept as raw text (outside the parsed dialect) are never flagged; nothing
can be proven about them.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import InvalidWeights, NoSchema
from .profiler import validity_reasons
from .sql import canonicalize, extract_features, parse
from .store import FLAGGED_SCHEMA, VALID, FlagChanged, QueryStore


@dataclass
class MaintenanceReport:
    checked: int = 0
    skipped: int = 0  # trusted ingest-time verdicts under the shortcut
    flagged: list = field(default_factory=list)
    unflagged: list = field(default_factory=list)
    stale: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "checked": self.checked,
            "skipped": self.skipped,
            "flagged": [str(q) for q in self.flagged],
            "unflagged": [str(q) for q in self.unflagged],
            "stale": [str(q) for q in self.stale],
        }


def resolve_validity(store: QueryStore, rec) -> tuple:
    """Reasons the query no longer fits the current schema (empty: it fits).

    Re-derives features from the canonical text against the current schema,
    so attribute resolution reflects today's relations, not ingest-time's.
    """
    schema = store.current_schema()
    tree = canonicalize(parse(rec.canonical_text))
    features = extract_features(tree, schema.attr_map())
    return validity_reasons(features, schema)


def flag_invalid(
    store: QueryStore, use_shortcut: bool = True
) -> MaintenanceReport:
    """Sweep the log, flagging queries the current schema invalidates.

    With the shortcut, queries submitted at or after the current schema's
    effective time keep their ingest-time verdict: they were validated
    against this same schema when logged. Older queries are re-resolved in
    full. Flag transitions are recorded as events; a no-op sweep writes
    nothing.
    """
    report = MaintenanceReport()
    schema = store.current_schema()  # NoSchema when absent
    for qid in sorted(store.queries):
        rec = store.queries[qid]
        if rec.validity == "deleted" or not rec.parsed:
            continue
        if use_shortcut and rec.submitted_at >= schema.effective_at:
            report.skipped += 1
            continue
        report.checked += 1
        reasons = resolve_validity(store, rec)
        if reasons:
            if rec.validity != FLAGGED_SCHEMA or rec.flag_reasons != tuple(reasons):
                store.append(FlagChanged(qid=qid, validity=FLAGGED_SCHEMA, reasons=reasons))
                report.flagged.append(qid)
        elif rec.validity == FLAGGED_SCHEMA:
            store.append(FlagChanged(qid=qid, validity=VALID, reasons=()))
            report.unflagged.append(qid)
    return report


def mark_stale_stats(store: QueryStore, data_changed_at: int, relations) -> list:
    """Queries whose recorded runtime stats predate a data change.

    A query is stale when it reads any of the changed relations and its
    stats were captured before the change. Ordered by how widely its
    template is used, so refresh effort goes to the queries most people
    rely on.
    """
    changed = {r.lower() for r in relations}
    out = []
    for qid, rec in store.queries.items():
        if rec.validity == "deleted":
            continue
        if rec.submitted_at >= data_changed_at:
            continue
        if not (rec.features.data_sources & changed):
            continue
        pop = (
            store.template_counts.get(rec.template_text, 0)
            if rec.template_text is not None
            else 0
        )
        out.append((-pop, qid))
    out.sort()
    return [qid for _negpop, qid in out]


@dataclass(frozen=True, slots=True)
class QualityWeights:
    efficiency: float = 1.0
    simplicity: float = 1.0
    annotations: float = 1.0

    def validate(self):
        vals = (self.efficiency, self.simplicity, self.annotations)
        if any(v < 0 for v in vals):
            raise InvalidWeights("quality weights must be non-negative")
        if not any(v > 0 for v in vals):
            raise InvalidWeights("at least one quality weight must be positive")
        return self


def _raw_efficiency(rec) -> float:
    return 1.0 / (1.0 + rec.execution_ms / 1000.0)


def _raw_simplicity(rec) -> float:
    fs = rec.features
    burden = len(fs.predicates) + len(fs.data_sources) + (2 if fs.has_subquery else 0)
    return 1.0 / (1.0 + burden)


def quality_score(
    store: QueryStore, qid: int, weights: QualityWeights | None = None
) -> tuple:
    """Blend of runtime efficiency, structural simplicity, and curation.

    Efficiency and simplicity are normalized against the best in the log so
    components stay comparable; annotations saturate at three. Returns
    (score, components).
    """
    weights = (weights or QualityWeights()).validate()
    rec = store.queries[qid]
    max_eff = 0.0
    max_simp = 0.0
    for other in store.queries.values():
        if other.validity == "deleted":
            continue
        max_eff = max(max_eff, _raw_efficiency(other))
        max_simp = max(max_simp, _raw_simplicity(other))
    eff = _raw_efficiency(rec) / max_eff if max_eff else 0.0
    simp = _raw_simplicity(rec) / max_simp if max_simp else 0.0
    bonus = min(1.0, len(rec.annotations) / 3.0)
    total = weights.efficiency + weights.simplicity + weights.annotations
    score = (
        weights.efficiency * eff + weights.simplicity * simp + weights.annotations * bonus
    ) / total
    components = {"efficiency": eff, "simplicity": simp, "annotations": bonus}
    return score, components


def maintain(store: QueryStore, use_shortcut: bool = True) -> MaintenanceReport:
    """Standard upkeep pass: re-validate flags against the current schema."""
    try:
        return flag_invalid(store, use_shortcut=use_shortcut)
    except NoSchema:
        return MaintenanceReport()
