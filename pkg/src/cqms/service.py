"""HTTP service and the engine facade behind it.

The Engine owns one store plus the current suggestion model and exposes
every interaction as a method returning plain JSON-ready dicts. The FastAPI
layer is a thin adapter: extract the principal from headers, call the
engine, serialize with the shared encoder. The CLI drives the same engine
methods through the same encoder, which is what keeps CLI and API output
byte-identical.
"""
from __future__ import annotations

import json
import socket
import threading
from dataclasses import dataclass, field
from pathlib import Path

from starlette.requests import Request  # annotations resolve at module scope

from .errors import (
    BindFailure,
    CqmsError,
    Forbidden,
    InvalidMetaQuery,
    NotFound,
)
from .maintenance import flag_invalid, maintain, mark_stale_stats, quality_score
from .metaquery import (
    Executor,
    Knn,
    MatchResult,
    RankWeights,
    from_partial,
    metaquery_from_json,
    rank,
)
from .miner import (
    EMPTY_MODEL,
    MinerConfig,
    build_model,
    cluster_queries,
    mine,
    recommend_queries,
    sessions_of,
    suggest_completions,
    suggest_corrections,
)
from .profiler import ProfilerConfig, RawQuery, ingest, ingest_batch, raw_from_json
from .store import (
    VISIBILITIES,
    Principal,
    QueryAdded,
    AnnotationAdded,
    AccessChanged,
    EdgeAdded,
    QueryDeleted,
    SchemaAdded,
    QueryStore,
)

PREVIEW_CHARS = 160


def to_json(payload, pretty: bool = False) -> str:
    """The one serializer every outward-facing surface goes through."""
    if pretty:
        return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False)
    return json.dumps(payload, separators=(",", ":"), sort_keys=True, ensure_ascii=False)


@dataclass(frozen=True)
class ServiceConfig:
    listen_host: str = "127.0.0.1"
    listen_port: int = 8080
    store_path: str = "./cqms-store"
    miner_interval_ms: int = 60000
    auth_mode: str = "header-principal"  # or "none"
    rank_weights: RankWeights = field(default_factory=RankWeights)
    profiler: ProfilerConfig = field(default_factory=ProfilerConfig)
    miner: MinerConfig = field(default_factory=MinerConfig)

    def validate(self):
        if self.miner_interval_ms <= 0:
            raise ValueError("miner_interval_ms must be positive")
        if self.auth_mode not in ("header-principal", "none"):
            raise ValueError("auth_mode must be header-principal or none")
        return self

    @classmethod
    def from_json(cls, body: dict) -> "ServiceConfig":
        kwargs = {}
        for key in ("listen_host", "store_path", "auth_mode"):
            if key in body:
                kwargs[key] = str(body[key])
        for key in ("listen_port", "miner_interval_ms"):
            if key in body:
                kwargs[key] = int(body[key])
        if "rank_weights" in body:
            kwargs["rank_weights"] = RankWeights.from_json(body["rank_weights"])
        if "profiler" in body:
            p = body["profiler"]
            kwargs["profiler"] = ProfilerConfig(
                base_rows_per_second=int(p.get("base_rows_per_second", 64)),
                min_budget_rows=int(p.get("min_budget_rows", 10)),
                max_budget_rows=int(p.get("max_budget_rows", 10000)),
                rng_seed=int(p.get("rng_seed", ProfilerConfig().rng_seed)),
            )
        if "miner" in body:
            m = body["miner"]
            d = MinerConfig()
            kwargs["miner"] = MinerConfig(
                session_gap_ms=int(m.get("session_gap_ms", d.session_gap_ms)),
                session_sim_threshold=float(
                    m.get("session_sim_threshold", d.session_sim_threshold)
                ),
                min_support=float(m.get("min_support", d.min_support)),
                min_confidence=float(m.get("min_confidence", d.min_confidence)),
                cluster_link_threshold=float(
                    m.get("cluster_link_threshold", d.cluster_link_threshold)
                ),
                model_version=str(m.get("model_version", d.model_version)),
            )
        return cls(**kwargs).validate()

    @classmethod
    def load(cls, path: str | Path) -> "ServiceConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


class Engine:
    """Facade over store, profiler, meta-query executor, miner, maintenance."""

    def __init__(self, store_path: str | Path, config: ServiceConfig | None = None):
        self.config = config or ServiceConfig()
        self.store = QueryStore(store_path)
        self._model_lock = threading.Lock()
        self.model = EMPTY_MODEL
        self.clusters: dict = {}
        if self.store.queries:
            self.refresh_model()

    def close(self):
        self.store.close()

    def refresh_model(self):
        model = build_model(self.store, self.config.miner)
        clusters = cluster_queries(self.store, self.config.miner.cluster_link_threshold)
        with self._model_lock:
            self.model = model
            self.clusters = clusters

    # --- views ---

    def _preview(self, raw_text: str) -> str:
        flat = " ".join(raw_text.split())
        return flat[:PREVIEW_CHARS]

    def query_view(self, q) -> dict:
        body = {
            "qid": str(q.qid),
            "raw_text": q.raw_text,
            "canonical_text": q.canonical_text,
            "template_text": q.template_text,
            "parsed": q.parsed,
            "owner": q.owner,
            "groups": sorted(q.groups),
            "submitted_at": q.submitted_at,
            "execution_ms": q.stats.execution_ms,
            "result_cardinality": q.stats.result_cardinality,
            "validity": q.validity,
            "flag_reasons": list(q.flag_reasons),
            "visibility": q.visibility,
            "session_id": q.session_id,
            "annotations": [
                {
                    "author": a.author,
                    "text": a.text,
                    "span": list(a.span) if a.span else None,
                    "created_at": a.created_at,
                }
                for a in q.annotations
            ],
        }
        if q.summary_ref is not None:
            summary = self.store.get_summary(q.summary_ref)
            if summary is not None:
                body["summary"] = {
                    "mode": summary.mode,
                    "columns": list(summary.columns),
                    "tuples": [list(t) for t in summary.tuples],
                    "source_cardinality": summary.source_cardinality,
                }
        return body

    def _result_row(self, m: MatchResult) -> dict:
        rec = self.store.queries[m.qid]
        return {
            "qid": str(m.qid),
            "score": m.score,
            "certainty": m.certainty,
            "preview": self._preview(rec.raw_text),
            "owner": rec.owner,
            "validity": rec.validity,
            "cluster": str(self.clusters[m.qid]) if m.qid in self.clusters else None,
        }

    # --- write paths ---

    def add_query(self, body: dict, principal: Principal) -> dict:
        raw = raw_from_json(body)
        raw = RawQuery(
            text=raw.text,
            user=principal.user,
            groups=raw.groups or tuple(sorted(principal.groups)),
            submitted_at=raw.submitted_at,
            execution_ms=raw.execution_ms,
            result_cardinality=raw.result_cardinality,
            output=raw.output,
            columns=raw.columns,
        )
        qid = ingest(self.store, raw, self.config.profiler)
        return {"qid": str(qid)}

    def add_batch(self, items, principal: Principal) -> dict:
        report = ingest_batch(
            self.store,
            items,
            self.config.profiler,
            default_user=principal.user,
            default_groups=principal.groups,
        )
        body = {"ingested": len(report.added)}
        if report.errors:
            body["errors"] = [{"line": n, "error": m} for n, m in report.errors]
        return body

    def annotate(self, body: dict, principal: Principal) -> dict:
        qid = int(body["qid"])
        self.store.get_visible(qid, principal)
        span = body.get("span")
        from .store import now_ms

        self.store.append(
            AnnotationAdded(
                qid=qid,
                author=principal.user,
                text=str(body.get("text", "")),
                span=tuple(span) if span is not None else None,
                created_at=int(body.get("created_at", now_ms())),
            )
        )
        return {"ok": True, "qid": str(qid)}

    def delete_query(self, qid: int, principal: Principal) -> dict:
        q = self.store.get_visible(qid, principal)
        if q.owner != principal.user:
            raise Forbidden("only the owner may delete a query")
        self.store.append(QueryDeleted(qid=qid))
        return {"ok": True, "qid": str(qid)}

    def set_access(self, qid: int, visibility: str, principal: Principal) -> dict:
        q = self.store.get_visible(qid, principal)
        if q.owner != principal.user:
            raise Forbidden("only the owner may change access")
        if visibility not in VISIBILITIES:
            raise InvalidMetaQuery(
                "visibility must be one of %s" % ", ".join(VISIBILITIES)
            )
        self.store.append(AccessChanged(qid=qid, visibility=visibility))
        return {"ok": True, "qid": str(qid), "visibility": visibility}

    def add_schema(self, body: dict, principal: Principal) -> dict:
        relations = body.get("relations")
        if not isinstance(relations, dict):
            raise InvalidMetaQuery("schema body needs a relations mapping")
        normalized = {
            str(name).lower(): [[str(a).lower(), str(t)] for a, t in cols]
            for name, cols in relations.items()
        }
        from .store import now_ms

        event = SchemaAdded(
            effective_at=int(body.get("effective_at", now_ms())), relations=normalized
        )
        self.store.append(event)
        return {"ok": True, "effective_at": event.effective_at}

    def add_edge(self, body: dict, principal: Principal) -> dict:
        from_qid = int(body["from"])
        to_qid = int(body["to"])
        self.store.get_visible(from_qid, principal)
        self.store.get_visible(to_qid, principal)
        self.store.append(
            EdgeAdded(
                from_qid=from_qid,
                to_qid=to_qid,
                edge_type=str(body.get("edge_type", "investigation")),
                edit_script=(),
            )
        )
        return {"ok": True}

    # --- read paths ---

    def get_query(self, qid: int, principal: Principal) -> dict:
        return self.query_view(self.store.get_visible(qid, principal))

    def search(self, body: dict, principal: Principal) -> dict:
        limit = body.get("limit")
        if "partial" in body and "type" not in body:
            mq = from_partial(str(body["partial"]), self.store.schema_or_none())
        else:
            mq = metaquery_from_json(body)
        ex = Executor(self.store)
        results = ex.execute(mq, principal, limit=int(limit) if limit else None)
        return {"results": [self._result_row(m) for m in results]}

    def similar(self, principal: Principal, qid: int | None = None,
                text: str | None = None, k: int = 10) -> dict:
        if qid is not None:
            self.store.get_visible(qid, principal)
        # the anchor always scores 1.0; ask for one extra and drop it
        mq = Knn(k=k + 1 if qid is not None else k, qid=qid, text=text)
        results = Executor(self.store).execute(mq, principal)
        results = [m for m in results if m.qid != qid][:k]
        return {"results": [self._result_row(m) for m in results]}

    def suggest(self, partial: str, principal: Principal, kind: str | None = None,
                limit: int = 10) -> dict:
        with self._model_lock:
            model = self.model
        completions = suggest_completions(model, partial, limit=limit * 3)
        if kind:
            completions = [c for c in completions if c.kind == kind]
        return {"completions": [c.to_json() for c in completions[:limit]]}

    def corrections(self, body: dict, principal: Principal) -> dict:
        text = str(body.get("query", ""))
        signal = body.get("signal") or {}
        cardinality = signal.get("result_cardinality")
        with self._model_lock:
            model = self.model
        out = suggest_corrections(
            self.store,
            model,
            text,
            result_cardinality=int(cardinality) if cardinality is not None else None,
        )
        return {"corrections": [c.to_json() for c in out]}

    def recommend(self, principal: Principal, recent, k: int = 5) -> dict:
        ranked = recommend_queries(
            self.store, principal, [int(q) for q in recent], k=k, config=self.config.miner
        )
        out = []
        for r in ranked:
            rec = self.store.queries[r.qid]
            out.append(
                {
                    "qid": str(r.qid),
                    "score": r.score,
                    "components": r.components,
                    "preview": self._preview(rec.raw_text),
                }
            )
        return {"recommendations": out}

    def sessions(self, user: str, principal: Principal) -> dict:
        views = sessions_of(self.store, user, principal)
        sessions = []
        for view in views:
            nodes = []
            for qid in view["qids"]:
                rec = self.store.queries[qid]
                nodes.append(
                    {
                        "qid": str(qid),
                        "preview": self._preview(rec.raw_text),
                        "raw_text": rec.raw_text,
                        "submitted_at": rec.submitted_at,
                    }
                )
            edges = [
                {
                    "from": str(e.from_qid),
                    "to": str(e.to_qid),
                    "type": e.edge_type,
                    "labels": [ed.label() for ed in e.edit_script],
                }
                for e in view["edges"]
            ]
            sessions.append(
                {"session_id": view["session_id"], "nodes": nodes, "edges": edges}
            )
        return {"user": user, "sessions": sessions}

    # --- admin ---

    def run_mine(self) -> dict:
        report, model = mine(self.store, self.config.miner)
        clusters = cluster_queries(self.store, self.config.miner.cluster_link_threshold)
        with self._model_lock:
            self.model = model
            self.clusters = clusters
        return report.to_json()

    def run_maintain(self, use_shortcut: bool = True) -> dict:
        report = maintain(self.store, use_shortcut=use_shortcut)
        return report.to_json()

    def run_stale(self, data_changed_at: int, relations) -> dict:
        qids = mark_stale_stats(self.store, data_changed_at, relations)
        return {"stale": [str(q) for q in qids]}

    def quality(self, qid: int, principal: Principal) -> dict:
        self.store.get_visible(qid, principal)
        score, components = quality_score(self.store, qid)
        return {"qid": str(qid), "score": score, "components": components}

    def report(self) -> dict:
        store = self.store
        by_validity: dict = {}
        session_ids = set()
        owners = set()
        for rec in store.queries.values():
            by_validity[rec.validity] = by_validity.get(rec.validity, 0) + 1
            owners.add(rec.owner)
            if rec.session_id is not None and rec.validity != "deleted":
                session_ids.add(rec.session_id)
        with self._model_lock:
            model = self.model
        return {
            "seq": store.seq,
            "queries": sum(
                n for v, n in by_validity.items() if v != "deleted"
            ),
            "by_validity": dict(sorted(by_validity.items())),
            "owners": len(owners),
            "sessions": len(session_ids),
            "edges": len(store.edges),
            "schemas": len(store.schemas),
            "rules": len(model.rules),
            "model_version": model.version,
            "model_built_seq": model.built_seq,
        }


# --- HTTP layer ---


def create_app(engine: Engine):
    from fastapi import FastAPI
    from fastapi.middleware.cors import CORSMiddleware
    from fastapi.responses import Response

    app = FastAPI(title="query log service", docs_url=None, redoc_url=None)
    app.state.engine = engine
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    class CqmsErrorWithStatus(CqmsError):
        def __init__(self, status: int, message: str):
            self.status = status
            super().__init__(message)

    def principal_of(request: Request) -> Principal:
        user = request.headers.get("x-principal")
        if user is None:
            if engine.config.auth_mode == "none":
                return Principal.of("anonymous")
            raise CqmsErrorWithStatus(401, "missing X-Principal header")
        groups = [
            g.strip() for g in request.headers.get("x-groups", "").split(",") if g.strip()
        ]
        return Principal.of(user, groups)

    def reply(payload, status: int = 200) -> Response:
        return Response(
            content=to_json(payload), status_code=status, media_type="application/json"
        )

    @app.exception_handler(CqmsError)
    async def on_engine_error(_request, exc: CqmsError):
        return reply({"error": str(exc)}, status=exc.status)

    @app.exception_handler(ValueError)
    async def on_value_error(_request, exc: ValueError):
        return reply({"error": str(exc)}, status=400)

    def parse_qid(raw: str) -> int:
        try:
            return int(raw)
        except ValueError:
            raise NotFound("no query %s" % raw) from None

    @app.post("/queries")
    async def add_query(request: Request):
        principal = principal_of(request)
        body = await request.json()
        return reply(engine.add_query(body, principal))

    @app.post("/queries/batch")
    async def add_batch(request: Request):
        principal = principal_of(request)
        text = (await request.body()).decode("utf-8")
        return reply(engine.add_batch(text.splitlines(), principal))

    @app.get("/queries/{qid}")
    async def get_query(qid: str, request: Request):
        return reply(engine.get_query(parse_qid(qid), principal_of(request)))

    @app.delete("/queries/{qid}")
    async def delete_query(qid: str, request: Request):
        return reply(engine.delete_query(parse_qid(qid), principal_of(request)))

    @app.put("/queries/{qid}/access")
    async def set_access(qid: str, request: Request):
        principal = principal_of(request)
        body = await request.json()
        return reply(
            engine.set_access(parse_qid(qid), str(body.get("visibility", "")), principal)
        )

    @app.post("/search")
    async def search(request: Request):
        principal = principal_of(request)
        body = await request.json()
        return reply(engine.search(body, principal))

    @app.get("/suggest")
    async def suggest(request: Request):
        partial = request.query_params.get("partial", "")
        kind = request.query_params.get("kind")
        limit = int(request.query_params.get("limit", "10"))
        return reply(engine.suggest(partial, principal_of(request), kind=kind, limit=limit))

    @app.post("/corrections")
    async def corrections(request: Request):
        principal = principal_of(request)
        body = await request.json()
        return reply(engine.corrections(body, principal))

    @app.get("/recommend")
    async def recommend(request: Request):
        recent = [
            q for q in request.query_params.get("recent", "").split(",") if q.strip()
        ]
        k = int(request.query_params.get("k", "5"))
        return reply(engine.recommend(principal_of(request), recent, k=k))

    @app.get("/sessions/{user}")
    async def sessions(user: str, request: Request):
        return reply(engine.sessions(user, principal_of(request)))

    @app.post("/annotations")
    async def annotate(request: Request):
        principal = principal_of(request)
        body = await request.json()
        return reply(engine.annotate(body, principal))

    @app.post("/schema")
    async def add_schema(request: Request):
        principal = principal_of(request)
        body = await request.json()
        return reply(engine.add_schema(body, principal))

    @app.post("/admin/mine")
    async def admin_mine(request: Request):
        principal_of(request)
        return reply(engine.run_mine())

    @app.post("/admin/maintain")
    async def admin_maintain(request: Request):
        principal_of(request)
        return reply(engine.run_maintain())

    @app.get("/admin/report")
    async def admin_report(request: Request):
        principal_of(request)
        return reply(engine.report())

    return app


def _check_bindable(host: str, port: int):
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
    except OSError as exc:
        raise BindFailure("cannot bind %s:%d: %s" % (host, port, exc)) from exc
    finally:
        probe.close()


def serve(config: ServiceConfig, store_path: str | Path | None = None):
    """Run the HTTP service with background mining on an interval."""
    import uvicorn

    config.validate()
    engine = Engine(store_path or config.store_path, config)
    app = create_app(engine)
    stop = threading.Event()

    def schedule():
        while not stop.wait(config.miner_interval_ms / 1000.0):
            try:
                engine.run_mine()
                engine.run_maintain()
            except CqmsError:
                pass  # next tick retries; store stays consistent

    worker = threading.Thread(target=schedule, name="miner-schedule", daemon=True)
    worker.start()
    _check_bindable(config.listen_host, config.listen_port)
    try:
        uvicorn.run(app, host=config.listen_host, port=config.listen_port, log_level="warning")
    finally:
        stop.set()
        engine.close()
