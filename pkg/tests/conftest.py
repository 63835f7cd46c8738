import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from cqms.profiler import ProfilerConfig, RawQuery, ingest
from cqms.store import Principal, QueryStore, SchemaAdded

LAKES_RELATIONS = {
    "watertemperature": [["lake", "text"], ["temp", "float"], ["day", "date"]],
    "watersalinity": [["lake", "text"], ["salinity", "float"], ["day", "date"]],
    "citylocations": [["city", "text"], ["lake", "text"], ["population", "int"]],
}


@pytest.fixture
def store(tmp_path):
    s = QueryStore(tmp_path / "store")
    yield s
    s.close()


@pytest.fixture
def lakes_store(tmp_path):
    s = QueryStore(tmp_path / "store")
    s.append(SchemaAdded(effective_at=1000, relations=LAKES_RELATIONS))
    yield s
    s.close()


@pytest.fixture
def limno():
    return Principal.of("ann", ["limno"])


def add_query(store, text, user="ann", groups=("limno",), ts=None, exec_ms=50,
              rows_out=None, output=None, columns=(), config=None):
    if ts is None:
        ts = 10_000 + 1000 * len(store.queries)
    return ingest(
        store,
        RawQuery(
            text=text,
            user=user,
            groups=tuple(groups),
            submitted_at=ts,
            execution_ms=exec_ms,
            result_cardinality=rows_out,
            output=output,
            columns=tuple(columns),
        ),
        config or ProfilerConfig(),
    )
