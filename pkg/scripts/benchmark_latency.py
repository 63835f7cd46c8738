#!/usr/bin/env python3
"""Measure suggestion and search latency against a bulk store.

Builds (or reuses) a store with a synthetic workload, then times
GET /suggest and POST /search through the in-process ASGI stack.
Reports p50/p95/max in milliseconds.
"""
import argparse
import json
import statistics
import sys
import tempfile
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))


def percentile(samples, q: float) -> float:
    ordered = sorted(samples)
    idx = min(len(ordered) - 1, max(0, round(q * (len(ordered) - 1))))
    return ordered[idx]


def build_store(path: str, count: int, seed: int):
    from cqms.profiler import ProfilerConfig, ingest, raw_from_json
    from cqms.store import QueryStore, SchemaAdded
    from cqms.synth import lakes_schema, workload

    store = QueryStore(path)
    schema = lakes_schema()
    store.append(
        SchemaAdded(effective_at=schema["effective_at"], relations=schema["relations"])
    )
    config = ProfilerConfig()
    t0 = time.perf_counter()
    for record in workload(count=count, seed=seed):
        ingest(store, raw_from_json(record), config)
    print("ingested %d records in %.1fs" % (count, time.perf_counter() - t0))
    return store


def run(store_path: str, requests: int) -> dict:
    from fastapi.testclient import TestClient

    from cqms.service import Engine, ServiceConfig, create_app

    engine = Engine(store_path, ServiceConfig())
    client = TestClient(create_app(engine))
    headers = {"X-Principal": "user00", "X-Groups": "limno"}

    partials = [
        "SELECT FROM WaterTemperature,",
        "SELECT FROM WaterSalinity,",
        "SELECT lake FROM WaterTemperature WHERE ",
        "SELECT FROM Cit",
        "SELECT FROM ",
    ]
    suggest_ms = []
    for i in range(requests):
        t0 = time.perf_counter()
        r = client.get(
            "/suggest", params={"partial": partials[i % len(partials)]}, headers=headers
        )
        suggest_ms.append((time.perf_counter() - t0) * 1000)
        assert r.status_code == 200, r.text

    searches = [
        {"type": "feature", "where": {"all": [
            {"references-relation": "watertemperature"},
            {"has-predicate": {"attr": "temp", "op": "<", "const_max": 12}},
        ]}, "limit": 20},
        {"type": "feature", "where": {"all": [
            {"references-relation": "citylocations"},
            {"has-predicate": {"attr": "population", "op": ">", "const_min": 400000}},
        ]}, "limit": 20},
        {"type": "feature", "where": {"all": [
            {"references-relation": "algaereports"},
            {"has-attribute": {"attr": "density"}},
        ]}, "limit": 20},
    ]
    search_ms = []
    for i in range(requests):
        t0 = time.perf_counter()
        r = client.post("/search", json=searches[i % len(searches)], headers=headers)
        search_ms.append((time.perf_counter() - t0) * 1000)
        assert r.status_code == 200, r.text

    engine.close()
    return {
        "suggest": {
            "p50_ms": percentile(suggest_ms, 0.5),
            "p95_ms": percentile(suggest_ms, 0.95),
            "max_ms": max(suggest_ms),
            "mean_ms": statistics.fmean(suggest_ms),
        },
        "search": {
            "p50_ms": percentile(search_ms, 0.5),
            "p95_ms": percentile(search_ms, 0.95),
            "max_ms": max(search_ms),
            "mean_ms": statistics.fmean(search_ms),
        },
        "requests": requests,
    }


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--store", help="existing store directory (skips the build)")
    parser.add_argument("--count", type=int, default=100000)
    parser.add_argument("--requests", type=int, default=200)
    parser.add_argument("--seed", type=int, default=90125)
    args = parser.parse_args()

    if args.store:
        path = args.store
    else:
        path = tempfile.mkdtemp(prefix="cqms-bench-")
        store = build_store(path, args.count, args.seed)
        store.close()
    report = run(path, args.requests)
    print(json.dumps(report, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
