"""Append-only event store for the query log.

On disk a store is a directory holding two UTF-8 newline-delimited JSON
files. events.log is the event stream: one record per line, shaped
{"seq": n, "type": "...", "at": epoch_ms, "body": {...}} with that field
order, ids as decimal strings, and a format-version header record as the
first line. summaries.log holds output summaries keyed by id so bulky result
samples stay out of the main log. All indexes live in memory and are pure
folds over the files: opening a store replays them from scratch, so crash
recovery is replay. One writer at a time (a process-wide lock per store);
readers see consistent snapshots identified by the sequence number.

TODO: lock file for cross-process single-writer enforcement; in-process use
is the supported mode.
"""
from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    DanglingReference,
    DeletedQuery,
    NoSchema,
    NotFound,
    StoreCorrupt,
    StoreIOError,
)
from .sql.diff import script_from_json, script_to_json
from .sql.features import FeatureSet

FORMAT_VERSION = 1

VALID = "valid"
FLAGGED_SCHEMA = "flagged_schema"
DELETED = "deleted"

PRIVATE = "private"
GROUP = "group"
PUBLIC = "public"
VISIBILITIES = (PRIVATE, GROUP, PUBLIC)

TEMPORAL = "temporal"
MODIFICATION = "modification"
INVESTIGATION = "investigation"
EDGE_TYPES = (TEMPORAL, MODIFICATION, INVESTIGATION)

FULL = "full"
SAMPLE = "sample"


@dataclass(frozen=True, slots=True)
class Principal:
    user: str
    groups: frozenset = frozenset()

    @classmethod
    def of(cls, user: str, groups=()) -> "Principal":
        return cls(user=user, groups=frozenset(groups))


@dataclass(frozen=True, slots=True)
class RuntimeStats:
    execution_ms: int = 0
    result_cardinality: int | None = None
    last_executed_at: int = 0
    stats_as_of: int = 0


@dataclass(frozen=True, slots=True)
class Annotation:
    author: str
    text: str
    span: tuple[int, int] | None
    created_at: int


@dataclass(frozen=True, slots=True)
class OutputSummary:
    mode: str  # "full" | "sample"
    columns: tuple
    tuples: tuple
    source_cardinality: int
    budget_rows: int
    rng_seed: int
    id: str | None = None


@dataclass(frozen=True, slots=True)
class SchemaSnapshot:
    effective_at: int
    relations: dict  # name -> ordered list of (attr, type)
    fingerprint: str = ""  # content identity; effective_at alone is not one

    def __post_init__(self):
        if not self.fingerprint:
            blob = json.dumps(self.relations, sort_keys=True, default=list)
            digest = hashlib.sha1(blob.encode("utf-8")).hexdigest()[:16]
            object.__setattr__(self, "fingerprint", digest)

    def attr_map(self) -> dict:
        return {r: {a for a, _t in cols} for r, cols in self.relations.items()}


@dataclass(frozen=True, slots=True)
class SessionEdge:
    from_qid: int
    to_qid: int
    edge_type: str
    edit_script: tuple = ()


@dataclass(frozen=True, slots=True)
class StoredQuery:
    """Merged current view of one logged query."""

    qid: int
    raw_text: str
    canonical_text: str
    template_text: str | None
    features: FeatureSet
    parsed: bool
    owner: str
    groups: frozenset
    submitted_at: int
    stats: RuntimeStats
    summary_ref: str | None
    session_id: str | None
    validity: str
    flag_reasons: tuple
    visibility: str
    annotations: tuple


# --- events ---


@dataclass(frozen=True)
class QueryAdded:
    raw_text: str
    canonical_text: str
    template_text: str | None
    features: FeatureSet
    parsed: bool
    owner: str
    groups: tuple
    submitted_at: int
    execution_ms: int = 0
    result_cardinality: int | None = None
    summary_ref: str | None = None
    validity: str = VALID
    flag_reasons: tuple = ()
    qid: int | None = None  # assigned by the store when absent


@dataclass(frozen=True)
class AnnotationAdded:
    qid: int
    author: str
    text: str
    span: tuple | None = None
    created_at: int = 0


@dataclass(frozen=True)
class EdgeAdded:
    from_qid: int
    to_qid: int
    edge_type: str
    edit_script: tuple = ()


@dataclass(frozen=True)
class SchemaAdded:
    effective_at: int
    relations: dict


@dataclass(frozen=True)
class FlagChanged:
    qid: int
    validity: str
    reasons: tuple = ()


@dataclass(frozen=True)
class AccessChanged:
    qid: int
    visibility: str


@dataclass(frozen=True)
class QueryDeleted:
    qid: int


@dataclass(frozen=True)
class SessionAssigned:
    qid: int
    session_id: str


_EVENT_TYPES = {
    "QueryAdded": QueryAdded,
    "AnnotationAdded": AnnotationAdded,
    "EdgeAdded": EdgeAdded,
    "SchemaAdded": SchemaAdded,
    "FlagChanged": FlagChanged,
    "AccessChanged": AccessChanged,
    "QueryDeleted": QueryDeleted,
    "SessionAssigned": SessionAssigned,
}


class _Rec:
    """Mutable internal record; StoredQuery views are built from it."""

    __slots__ = (
        "qid",
        "raw_text",
        "canonical_text",
        "template_text",
        "features",
        "parsed",
        "owner",
        "groups",
        "submitted_at",
        "execution_ms",
        "result_cardinality",
        "summary_ref",
        "session_id",
        "validity",
        "flag_reasons",
        "visibility",
        "annotations",
        "text_tokens",
    )

    def __init__(self):
        self.session_id = None
        self.visibility = GROUP
        self.annotations = []
        self.flag_reasons = ()


def _now_ms() -> int:
    return int(time.time() * 1000)


def now_ms() -> int:
    return _now_ms()


_TOKEN_CACHE: dict[str, frozenset] = {}


def _text_tokens(text: str) -> frozenset:
    toks = _TOKEN_CACHE.get(text)
    if toks is None:
        import re

        toks = frozenset(w.lower() for w in re.findall(r"\w+", text))
        if len(_TOKEN_CACHE) > 20000:
            _TOKEN_CACHE.clear()
        _TOKEN_CACHE[text] = toks
    return toks


class QueryStore:
    """Event log plus derived in-memory indexes."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.mkdir(parents=True, exist_ok=True)
        self._events_path = self.path / "events.log"
        self._summaries_path = self.path / "summaries.log"
        self._lock = threading.RLock()
        self.seq = 0
        self._next_qid = 1
        self._next_summary = 1
        self.queries: dict[int, _Rec] = {}
        self.by_relation: dict[str, set] = {}
        self.by_attr: dict[str, set] = {}
        self.by_pred_attr: dict[str, set] = {}
        self.by_owner: dict[str, set] = {}
        self.template_counts: Counter = Counter()
        self.schemas: list[SchemaSnapshot] = []
        self.edges: dict[tuple, SessionEdge] = {}
        self.summaries: dict[str, OutputSummary] = {}
        self._replay()
        self._events_file = open(self._events_path, "a", encoding="utf-8")
        self._summaries_file = open(self._summaries_path, "a", encoding="utf-8")
        if self.seq == 0:
            self._write_record(0, "format", {"version": FORMAT_VERSION})

    # --- durability ---

    def _write_record(self, seq: int, etype: str, body: dict):
        record = {"seq": seq, "type": etype, "at": _now_ms(), "body": body}
        try:
            self._events_file.write(json.dumps(record, ensure_ascii=False) + "\n")
            self._events_file.flush()
        except OSError as exc:
            raise StoreIOError(str(exc)) from exc

    def close(self):
        with self._lock:
            try:
                self._events_file.close()
                self._summaries_file.close()
            except OSError:
                pass

    def _replay(self):
        if self._summaries_path.exists():
            with open(self._summaries_path, encoding="utf-8") as fh:
                for i, line in enumerate(fh, start=1):
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        body = json.loads(line)
                        summary = _summary_from_json(body)
                    except (ValueError, KeyError) as exc:
                        raise StoreCorrupt(
                            "summaries.log line %d: %s" % (i, exc)
                        ) from exc
                    self.summaries[summary.id] = summary
                    n = int(summary.id[1:])
                    self._next_summary = max(self._next_summary, n + 1)
        if not self._events_path.exists():
            return
        with open(self._events_path, encoding="utf-8") as fh:
            for i, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                except ValueError as exc:
                    raise StoreCorrupt("events.log line %d: %s" % (i, exc)) from exc
                seq = record.get("seq")
                etype = record.get("type")
                if i == 1:
                    if etype != "format" or record.get("body", {}).get("version") != FORMAT_VERSION:
                        raise StoreCorrupt("missing or unsupported format header")
                    continue
                if seq != self.seq + 1:
                    raise StoreCorrupt(
                        "events.log line %d: expected seq %d, found %r" % (i, self.seq + 1, seq)
                    )
                try:
                    event = _event_from_json(etype, record["body"])
                except (KeyError, ValueError, TypeError) as exc:
                    raise StoreCorrupt("events.log line %d: %s" % (i, exc)) from exc
                self._check(event)
                self._apply(event)
                self.seq = seq

    # --- writing ---

    def append(self, event):
        """Validate, durably append, then apply.

        Returns the event as applied (a QueryAdded comes back with its
        assigned qid filled in).
        """
        with self._lock:
            if isinstance(event, QueryAdded) and event.qid is None:
                event = _replace_qid(event, self._next_qid)
            self._check(event)
            etype = type(event).__name__
            body = _event_to_json(event)
            self._write_record(self.seq + 1, etype, body)
            self._apply(event)
            self.seq += 1
            return event

    def _check(self, event):
        if isinstance(event, QueryAdded):
            if event.qid in self.queries:
                raise DanglingReference("qid %s already present" % event.qid)
            if event.summary_ref is not None and event.summary_ref not in self.summaries:
                raise DanglingReference("unknown summary %s" % event.summary_ref)
            return
        if isinstance(event, (AnnotationAdded, FlagChanged, AccessChanged, QueryDeleted, SessionAssigned)):
            qid = event.qid
            if qid not in self.queries:
                raise DanglingReference("unknown qid %s" % qid)
            if isinstance(event, AnnotationAdded):
                span = event.span
                if span is not None:
                    text = self.queries[qid].raw_text
                    if not (0 <= span[0] <= span[1] <= len(text)):
                        raise ValueError("annotation span out of bounds")
            if isinstance(event, AccessChanged) and event.visibility not in VISIBILITIES:
                raise ValueError("unknown visibility %r" % event.visibility)
            return
        if isinstance(event, EdgeAdded):
            if event.from_qid not in self.queries or event.to_qid not in self.queries:
                raise DanglingReference(
                    "edge %s -> %s references unknown query" % (event.from_qid, event.to_qid)
                )
            if event.edge_type not in EDGE_TYPES:
                raise ValueError("unknown edge type %r" % event.edge_type)
            return
        if isinstance(event, SchemaAdded):
            if not isinstance(event.relations, dict):
                raise ValueError("schema relations must be a mapping")
            return

    def _apply(self, event):
        if isinstance(event, QueryAdded):
            rec = _Rec()
            rec.qid = event.qid
            rec.raw_text = event.raw_text
            rec.canonical_text = event.canonical_text
            rec.template_text = event.template_text
            rec.features = event.features
            rec.parsed = event.parsed
            rec.owner = event.owner
            rec.groups = frozenset(event.groups)
            rec.submitted_at = event.submitted_at
            rec.execution_ms = event.execution_ms
            rec.result_cardinality = event.result_cardinality
            rec.summary_ref = event.summary_ref
            rec.validity = event.validity
            rec.flag_reasons = tuple(event.flag_reasons)
            rec.text_tokens = _text_tokens(event.canonical_text)
            self.queries[event.qid] = rec
            self._next_qid = max(self._next_qid, event.qid + 1)
            self._index(rec)
        elif isinstance(event, AnnotationAdded):
            rec = self.queries[event.qid]
            rec.annotations.append(
                Annotation(
                    author=event.author,
                    text=event.text,
                    span=tuple(event.span) if event.span is not None else None,
                    created_at=event.created_at,
                )
            )
        elif isinstance(event, EdgeAdded):
            edge = SessionEdge(
                from_qid=event.from_qid,
                to_qid=event.to_qid,
                edge_type=event.edge_type,
                edit_script=tuple(event.edit_script),
            )
            self.edges[(event.from_qid, event.to_qid)] = edge
        elif isinstance(event, SchemaAdded):
            snap = SchemaSnapshot(
                effective_at=event.effective_at,
                relations={
                    name: [tuple(col) for col in cols]
                    for name, cols in event.relations.items()
                },
            )
            self.schemas.append(snap)
            self.schemas.sort(key=lambda s: s.effective_at)
        elif isinstance(event, FlagChanged):
            rec = self.queries[event.qid]
            if rec.validity != DELETED:
                rec.validity = event.validity
                rec.flag_reasons = tuple(event.reasons)
        elif isinstance(event, AccessChanged):
            self.queries[event.qid].visibility = event.visibility
        elif isinstance(event, QueryDeleted):
            rec = self.queries[event.qid]
            if rec.validity != DELETED:
                rec.validity = DELETED
                self._deindex(rec)
        elif isinstance(event, SessionAssigned):
            self.queries[event.qid].session_id = event.session_id

    def _index(self, rec: _Rec):
        qid = rec.qid
        fs = rec.features
        for r in fs.data_sources:
            self.by_relation.setdefault(r, set()).add(qid)
        for a, _r, _role in fs.attributes:
            self.by_attr.setdefault(a, set()).add(qid)
        for a, _r, _op, _c in fs.predicates:
            self.by_pred_attr.setdefault(a, set()).add(qid)
        self.by_owner.setdefault(rec.owner, set()).add(qid)
        if rec.template_text is not None:
            self.template_counts[rec.template_text] += 1

    def _deindex(self, rec: _Rec):
        qid = rec.qid
        fs = rec.features
        for r in fs.data_sources:
            self.by_relation.get(r, set()).discard(qid)
        for a, _r, _role in fs.attributes:
            self.by_attr.get(a, set()).discard(qid)
        for a, _r, _op, _c in fs.predicates:
            self.by_pred_attr.get(a, set()).discard(qid)
        self.by_owner.get(rec.owner, set()).discard(qid)
        if rec.template_text is not None:
            self.template_counts[rec.template_text] -= 1
            if self.template_counts[rec.template_text] <= 0:
                del self.template_counts[rec.template_text]

    def put_summary(self, summary: OutputSummary) -> str:
        with self._lock:
            sid = "s%d" % self._next_summary
            self._next_summary += 1
            stored = OutputSummary(
                mode=summary.mode,
                columns=summary.columns,
                tuples=summary.tuples,
                source_cardinality=summary.source_cardinality,
                budget_rows=summary.budget_rows,
                rng_seed=summary.rng_seed,
                id=sid,
            )
            try:
                self._summaries_file.write(
                    json.dumps(_summary_to_json(stored), ensure_ascii=False) + "\n"
                )
                self._summaries_file.flush()
            except OSError as exc:
                raise StoreIOError(str(exc)) from exc
            self.summaries[sid] = stored
            return sid

    def get_summary(self, sid: str) -> OutputSummary | None:
        return self.summaries.get(sid)

    # --- reading ---

    def live_qids(self) -> set:
        return {qid for qid, rec in self.queries.items() if rec.validity != DELETED}

    def get(self, qid: int) -> StoredQuery:
        rec = self.queries.get(qid)
        if rec is None:
            raise NotFound("no query %s" % qid)
        if rec.validity == DELETED:
            raise DeletedQuery("query %s was deleted" % qid)
        return self._view(rec)

    def get_visible(self, qid: int, principal: Principal) -> StoredQuery:
        q = self.get(qid)  # NotFound/DeletedQuery propagate as 404
        if not self.visible_rec(self.queries[qid], principal):
            raise NotFound("no query %s" % qid)  # invisible reads as absent
        return q

    def visible_rec(self, rec: _Rec, principal: Principal) -> bool:
        if rec.validity == DELETED:
            return False
        if rec.owner == principal.user:
            return True
        v = rec.visibility
        if v == PUBLIC:
            return True
        if v == GROUP:
            return bool(rec.groups & principal.groups)
        return False

    def visible(self, qid: int, principal: Principal) -> bool:
        rec = self.queries.get(qid)
        return rec is not None and self.visible_rec(rec, principal)

    def _view(self, rec: _Rec) -> StoredQuery:
        return StoredQuery(
            qid=rec.qid,
            raw_text=rec.raw_text,
            canonical_text=rec.canonical_text,
            template_text=rec.template_text,
            features=rec.features,
            parsed=rec.parsed,
            owner=rec.owner,
            groups=rec.groups,
            submitted_at=rec.submitted_at,
            stats=RuntimeStats(
                execution_ms=rec.execution_ms,
                result_cardinality=rec.result_cardinality,
                last_executed_at=rec.submitted_at,
                stats_as_of=rec.submitted_at,
            ),
            summary_ref=rec.summary_ref,
            session_id=rec.session_id,
            validity=rec.validity,
            flag_reasons=rec.flag_reasons,
            visibility=rec.visibility,
            annotations=tuple(rec.annotations),
        )

    def scan(
        self,
        principal: Principal,
        owner: str | None = None,
        group: str | None = None,
        since: int | None = None,
        until: int | None = None,
        validity: str | None = None,
    ):
        """Visible queries, newest first."""
        with self._lock:
            recs = sorted(
                self.queries.values(), key=lambda r: (r.submitted_at, r.qid), reverse=True
            )
        for rec in recs:
            if rec.validity == DELETED:
                continue
            if not self.visible_rec(rec, principal):
                continue
            if owner is not None and rec.owner != owner:
                continue
            if group is not None and group not in rec.groups:
                continue
            if since is not None and rec.submitted_at < since:
                continue
            if until is not None and rec.submitted_at > until:
                continue
            if validity is not None and rec.validity != validity:
                continue
            yield self._view(rec)

    def current_schema(self) -> SchemaSnapshot:
        if not self.schemas:
            raise NoSchema("no schema snapshot recorded")
        return self.schemas[-1]

    def schema_or_none(self) -> SchemaSnapshot | None:
        return self.schemas[-1] if self.schemas else None

    def owners(self) -> list[str]:
        return sorted(self.by_owner)

    def edges_from(self, qid: int):
        return [e for (f, _t), e in self.edges.items() if f == qid]

    def max_template_count(self) -> int:
        if not self.template_counts:
            return 0
        return max(self.template_counts.values())

    # --- replay identity ---

    def index_digest(self) -> bytes:
        """Canonical serialization of all derived state, for replay checks."""
        with self._lock:
            state = {
                "seq": self.seq,
                "queries": {
                    str(qid): {
                        "raw_text": rec.raw_text,
                        "canonical_text": rec.canonical_text,
                        "template_text": rec.template_text,
                        "features": rec.features.to_json(),
                        "parsed": rec.parsed,
                        "owner": rec.owner,
                        "groups": sorted(rec.groups),
                        "submitted_at": rec.submitted_at,
                        "execution_ms": rec.execution_ms,
                        "result_cardinality": rec.result_cardinality,
                        "summary_ref": rec.summary_ref,
                        "session_id": rec.session_id,
                        "validity": rec.validity,
                        "flag_reasons": list(rec.flag_reasons),
                        "visibility": rec.visibility,
                        "annotations": [
                            [a.author, a.text, list(a.span) if a.span else None, a.created_at]
                            for a in rec.annotations
                        ],
                    }
                    for qid, rec in sorted(self.queries.items())
                },
                "by_relation": {k: sorted(v) for k, v in sorted(self.by_relation.items())},
                "by_attr": {k: sorted(v) for k, v in sorted(self.by_attr.items())},
                "by_pred_attr": {k: sorted(v) for k, v in sorted(self.by_pred_attr.items())},
                "by_owner": {k: sorted(v) for k, v in sorted(self.by_owner.items())},
                "template_counts": dict(sorted(self.template_counts.items())),
                "schemas": [
                    {"effective_at": s.effective_at, "relations": {k: [list(c) for c in v] for k, v in sorted(s.relations.items())}}
                    for s in self.schemas
                ],
                "edges": {
                    "%s->%s" % key: {
                        "type": e.edge_type,
                        "script": script_to_json(e.edit_script),
                    }
                    for key, e in sorted(self.edges.items())
                },
                "summaries": {sid: _summary_to_json(s) for sid, s in sorted(self.summaries.items())},
            }
            return json.dumps(state, sort_keys=True, ensure_ascii=False).encode("utf-8")


def _replace_qid(event: QueryAdded, qid: int) -> QueryAdded:
    from dataclasses import replace

    return replace(event, qid=qid)


# --- event (de)serialization; ids travel as decimal strings ---


def _event_to_json(event) -> dict:
    if isinstance(event, QueryAdded):
        return {
            "qid": str(event.qid),
            "raw_text": event.raw_text,
            "canonical_text": event.canonical_text,
            "template_text": event.template_text,
            "features": event.features.to_json(),
            "parsed": event.parsed,
            "owner": event.owner,
            "groups": sorted(event.groups),
            "submitted_at": event.submitted_at,
            "execution_ms": event.execution_ms,
            "result_cardinality": event.result_cardinality,
            "summary_ref": event.summary_ref,
            "validity": event.validity,
            "flag_reasons": list(event.flag_reasons),
        }
    if isinstance(event, AnnotationAdded):
        return {
            "qid": str(event.qid),
            "author": event.author,
            "text": event.text,
            "span": list(event.span) if event.span is not None else None,
            "created_at": event.created_at,
        }
    if isinstance(event, EdgeAdded):
        return {
            "from": str(event.from_qid),
            "to": str(event.to_qid),
            "edge_type": event.edge_type,
            "edit_script": script_to_json(event.edit_script),
        }
    if isinstance(event, SchemaAdded):
        return {
            "effective_at": event.effective_at,
            "relations": {name: [list(c) for c in cols] for name, cols in event.relations.items()},
        }
    if isinstance(event, FlagChanged):
        return {"qid": str(event.qid), "validity": event.validity, "reasons": list(event.reasons)}
    if isinstance(event, AccessChanged):
        return {"qid": str(event.qid), "visibility": event.visibility}
    if isinstance(event, QueryDeleted):
        return {"qid": str(event.qid)}
    if isinstance(event, SessionAssigned):
        return {"qid": str(event.qid), "session_id": event.session_id}
    raise TypeError("unknown event type %r" % type(event).__name__)


def _event_from_json(etype: str, body: dict):
    cls = _EVENT_TYPES.get(etype)
    if cls is None:
        raise StoreCorrupt("unknown event type %r" % etype)
    if cls is QueryAdded:
        return QueryAdded(
            qid=int(body["qid"]),
            raw_text=body["raw_text"],
            canonical_text=body["canonical_text"],
            template_text=body.get("template_text"),
            features=FeatureSet.from_json(body.get("features", {})),
            parsed=bool(body.get("parsed", True)),
            owner=body["owner"],
            groups=tuple(body.get("groups", ())),
            submitted_at=int(body["submitted_at"]),
            execution_ms=int(body.get("execution_ms", 0)),
            result_cardinality=body.get("result_cardinality"),
            summary_ref=body.get("summary_ref"),
            validity=body.get("validity", VALID),
            flag_reasons=tuple(body.get("flag_reasons", ())),
        )
    if cls is AnnotationAdded:
        span = body.get("span")
        return AnnotationAdded(
            qid=int(body["qid"]),
            author=body["author"],
            text=body["text"],
            span=tuple(span) if span is not None else None,
            created_at=int(body.get("created_at", 0)),
        )
    if cls is EdgeAdded:
        return EdgeAdded(
            from_qid=int(body["from"]),
            to_qid=int(body["to"]),
            edge_type=body["edge_type"],
            edit_script=script_from_json(body.get("edit_script", [])),
        )
    if cls is SchemaAdded:
        return SchemaAdded(effective_at=int(body["effective_at"]), relations=body["relations"])
    if cls is FlagChanged:
        return FlagChanged(
            qid=int(body["qid"]),
            validity=body["validity"],
            reasons=tuple(body.get("reasons", ())),
        )
    if cls is AccessChanged:
        return AccessChanged(qid=int(body["qid"]), visibility=body["visibility"])
    if cls is QueryDeleted:
        return QueryDeleted(qid=int(body["qid"]))
    if cls is SessionAssigned:
        return SessionAssigned(qid=int(body["qid"]), session_id=body["session_id"])
    raise StoreCorrupt("unhandled event type %r" % etype)


def _summary_to_json(summary: OutputSummary) -> dict:
    return {
        "id": summary.id,
        "mode": summary.mode,
        "columns": list(summary.columns),
        "tuples": [list(t) for t in summary.tuples],
        "source_cardinality": summary.source_cardinality,
        "budget_rows": summary.budget_rows,
        "rng_seed": summary.rng_seed,
    }


def _summary_from_json(body: dict) -> OutputSummary:
    return OutputSummary(
        id=body["id"],
        mode=body["mode"],
        columns=tuple(body.get("columns", ())),
        tuples=tuple(tuple(t) for t in body.get("tuples", ())),
        source_cardinality=int(body["source_cardinality"]),
        budget_rows=int(body["budget_rows"]),
        rng_seed=int(body["rng_seed"]),
    )
