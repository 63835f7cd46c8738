"""Synthetic workloads over a lakes-monitoring schema.

Two generators: a small hand-shaped scenario corpus exercising suggestion
and session behavior end to end, and a bulk workload for load and latency
measurements. Bulk text variety is capped: real query logs repeat a modest
set of shapes endlessly, and the analyzer cache is built around that.
All output is deterministic for a fixed seed.
"""
from __future__ import annotations

import random

LAKES = [
    "Lake Washington",
    "Lake Union",
    "Lake Sammamish",
    "Green Lake",
    "Lake Chelan",
    "Lake Crescent",
]

LAKES_SCHEMA = {
    "relations": {
        "watertemperature": [["lake", "text"], ["temp", "float"], ["day", "date"]],
        "watersalinity": [["lake", "text"], ["salinity", "float"], ["day", "date"]],
        "citylocations": [["city", "text"], ["lake", "text"], ["population", "int"]],
        "rainfall": [["city", "text"], ["inches", "float"], ["day", "date"]],
        "algaereports": [["lake", "text"], ["species", "text"], ["density", "float"]],
    }
}


def lakes_schema(effective_at: int = 1000) -> dict:
    return {"effective_at": effective_at, "relations": LAKES_SCHEMA["relations"]}


REFINEMENT_TRAIL = [
    "SELECT * FROM WaterTemperature WHERE temp > 20",
    "SELECT * FROM WaterTemperature, WaterSalinity WHERE temp > 20",
    "SELECT * FROM WaterTemperature, WaterSalinity WHERE temp > 15",
    "SELECT * FROM WaterTemperature, WaterSalinity WHERE temp > 18",
    "SELECT * FROM WaterTemperature, WaterSalinity WHERE temp > 18 AND salinity < 2",
    "SELECT * FROM WaterTemperature, WaterSalinity "
    "WHERE temp > 18 AND salinity < 2 AND WaterSalinity.lake = 'Lake Union'",
]


def scenario_corpus(base_ts: int = 1_700_000_000_000) -> tuple:
    """A small corpus where the interesting orderings hold by construction.

    CityLocations carries the highest global FROM-count while queries that
    mention WaterSalinity overwhelmingly also mention WaterTemperature, so
    completion ranking flips with context. One user's six-step exploration
    forms a single session. Returns (schema body, list of log records).
    """
    records = []
    ts = base_ts

    def rec(query, user, exec_ms=40, gap_ms=30000, **extra):
        nonlocal ts
        ts += gap_ms
        body = {"query": query, "user": user, "ts": ts, "exec_ms": exec_ms}
        body.update(extra)
        return body

    for i in range(20):
        records.append(
            rec(
                "SELECT city FROM CityLocations WHERE population > %d" % (25000 + 5000 * i),
                user="alice" if i % 2 == 0 else "bob",
                gap_ms=900000,
                rows_out=40 - i,
            )
        )
    for i in range(3):
        records.append(
            rec(
                "SELECT t.lake FROM WaterSalinity s, WaterTemperature t "
                "WHERE s.lake = t.lake AND s.salinity < %d" % (i + 1),
                user="carol",
                gap_ms=900000,
                rows_out=6,
            )
        )
    records.append(
        rec(
            "SELECT c.city FROM WaterSalinity w, CityLocations c WHERE w.lake = c.lake",
            user="carol",
            gap_ms=900000,
            rows_out=4,
        )
    )
    for step, query in enumerate(REFINEMENT_TRAIL):
        records.append(rec(query, user="dana", gap_ms=60000, rows_out=10 - step))
    records.append(
        rec(
            "SELECT lake FROM WaterTemperature WHERE temp < 18",
            user="erin",
            gap_ms=900000,
            columns=["lake"],
            output=[["Lake Washington"], ["Lake Sammamish"]],
        )
    )
    records.append(
        rec(
            "SELECT lake FROM WaterTemperature WHERE temp > 25",
            user="erin",
            gap_ms=900000,
            columns=["lake"],
            output=[["Lake Union"], ["Lake Washington"]],
        )
    )
    return lakes_schema(base_ts - 1000), records


_FILTERS = {
    "watertemperature": [("temp", list(range(8, 31, 2))), ("lake", LAKES)],
    "watersalinity": [("salinity", [1, 2, 3, 5, 8]), ("lake", LAKES)],
    "citylocations": [("population", [10000, 50000, 100000, 250000, 500000]), ("lake", LAKES)],
    "rainfall": [("inches", [1, 2, 4, 8]), ("city", ["Seattle", "Tacoma", "Everett"])],
    "algaereports": [("density", [10, 100, 1000]), ("lake", LAKES)],
}
_JOINS = [
    ("watertemperature", "watersalinity", "lake"),
    ("watertemperature", "citylocations", "lake"),
    ("watersalinity", "citylocations", "lake"),
    ("citylocations", "rainfall", "city"),
    ("algaereports", "watertemperature", "lake"),
]
_OPS = ["<", "<=", ">", ">=", "="]


def _const_sql(value) -> str:
    if isinstance(value, str):
        return "'%s'" % value.replace("'", "''")
    return str(value)


def _columns_of(rel: str) -> list:
    return [a for a, _t in LAKES_SCHEMA["relations"][rel]]


def _one_text(rng: random.Random) -> str:
    shape = rng.randrange(5)
    if shape == 0:
        rel = rng.choice(sorted(_FILTERS))
        attr, pool = rng.choice(_FILTERS[rel])
        cols = ", ".join(sorted(rng.sample(_columns_of(rel), 2)))
        return "SELECT %s FROM %s WHERE %s %s %s" % (
            cols, rel, attr, rng.choice(_OPS), _const_sql(rng.choice(pool)),
        )
    if shape == 1:
        a, b, key = rng.choice(_JOINS)
        attr, pool = rng.choice(_FILTERS[a])
        return (
            "SELECT %s.%s FROM %s, %s WHERE %s.%s = %s.%s AND %s.%s %s %s"
            % (a, key, a, b, a, key, b, key, a, attr, rng.choice(_OPS),
               _const_sql(rng.choice(pool)))
        )
    if shape == 2:
        rel = rng.choice(sorted(_FILTERS))
        group = _FILTERS[rel][1][0]
        return "SELECT %s, COUNT(*) FROM %s GROUP BY %s" % (group, rel, group)
    if shape == 3:
        rel = rng.choice(sorted(_FILTERS))
        attr, pool = rng.choice(_FILTERS[rel])
        values = sorted(pool, key=str)[:2]
        if all(isinstance(v, (int, float)) for v in values) and len(values) == 2:
            return "SELECT %s FROM %s WHERE %s BETWEEN %s AND %s ORDER BY %s DESC LIMIT %d" % (
                attr, rel, attr, _const_sql(min(values)), _const_sql(max(values)),
                attr, rng.choice([5, 10, 25]),
            )
        return "SELECT %s FROM %s ORDER BY %s LIMIT %d" % (attr, rel, attr, rng.choice([5, 10]))
    rel = rng.choice(sorted(_FILTERS))
    attr, pool = rng.choice(_FILTERS[rel])
    values = rng.sample(pool, min(3, len(pool)))
    return "SELECT DISTINCT %s FROM %s WHERE %s IN (%s)" % (
        attr, rel, attr, ", ".join(_const_sql(v) for v in sorted(values, key=str)),
    )


def text_pool(distinct: int, seed: int) -> list:
    rng = random.Random(seed)
    seen = {}
    guard = 0
    while len(seen) < distinct and guard < distinct * 50:
        guard += 1
        seen.setdefault(_one_text(rng), None)
    return list(seen)


def workload(
    count: int = 100000,
    distinct_texts: int = 1500,
    users: int = 40,
    seed: int = 90125,
    start_ts: int = 1_700_000_000_000,
):
    """Bulk log records: `count` submissions drawn from a capped text pool."""
    rng = random.Random(seed)
    pool = text_pool(distinct_texts, seed)
    names = ["user%02d" % i for i in range(users)]
    clocks = {name: start_ts + rng.randrange(0, 86_400_000) for name in names}
    for _ in range(count):
        user = rng.choice(names)
        clocks[user] += rng.choice([5000, 20000, 60000, 120000, 1_200_000])
        yield {
            "query": rng.choice(pool),
            "user": user,
            "ts": clocks[user],
            "exec_ms": rng.choice([5, 20, 80, 300, 1200, 4500]),
            "rows_out": rng.randrange(0, 5000),
            "groups": ["limno"],
        }
