"""HTTP surface: endpoint contracts, auth, visibility, error mapping."""
import json

import pytest
from fastapi.testclient import TestClient

from cqms.service import Engine, ServiceConfig, create_app, to_json

from conftest import LAKES_RELATIONS

ANN = {"X-Principal": "ann", "X-Groups": "limno"}
TOM = {"X-Principal": "tom", "X-Groups": "limno"}
EVE = {"X-Principal": "eve"}


@pytest.fixture
def engine(tmp_path):
    eng = Engine(tmp_path / "store")
    yield eng
    eng.close()


@pytest.fixture
def client(engine):
    return TestClient(create_app(engine))


def post_query(client, text, headers=ANN, **extra):
    body = {"query": text, "exec_ms": 50}
    body.update(extra)
    resp = client.post("/queries", json=body, headers=headers)
    assert resp.status_code == 200, resp.text
    return resp.json()["qid"]


def seed(client):
    resp = client.post(
        "/schema",
        json={"relations": LAKES_RELATIONS, "effective_at": 1000},
        headers=ANN,
    )
    assert resp.status_code == 200
    qids = {}
    qids["wide"] = post_query(
        client,
        "SELECT * FROM WaterSalinity, WaterTemperature WHERE salinity < 2",
        ts=10_000,
    )
    qids["narrow"] = post_query(
        client,
        "SELECT lake FROM WaterSalinity, WaterTemperature WHERE temp > 18",
        ts=11_000,
    )
    qids["city"] = post_query(
        client, "SELECT city FROM CityLocations WHERE population > 100", ts=12_000
    )
    return qids


# --- ingestion ---


def test_add_query_assigns_sequential_string_ids(client):
    assert post_query(client, "SELECT * FROM t") == "1"
    assert post_query(client, "SELECT * FROM u") == "2"


def test_added_query_is_owned_by_the_caller(client):
    qid = post_query(client, "SELECT * FROM t")
    body = client.get("/queries/" + qid, headers=ANN).json()
    assert body["owner"] == "ann"
    assert body["groups"] == ["limno"]
    assert body["execution_ms"] == 50


def test_caller_groups_parsed_from_header(client):
    headers = {"X-Principal": "ann", "X-Groups": " limno , biology "}
    qid = post_query(client, "SELECT * FROM t", headers=headers)
    body = client.get("/queries/" + qid, headers=headers).json()
    assert body["groups"] == ["biology", "limno"]


def test_empty_query_text_rejected(client):
    resp = client.post("/queries", json={"query": "   "}, headers=ANN)
    assert resp.status_code == 400
    assert set(resp.json()) == {"error"}


def test_unreadable_body_is_a_user_error(client):
    resp = client.post("/queries", content="not json at all", headers=ANN)
    assert resp.status_code == 400


def test_batch_ingests_ndjson_lines(client):
    lines = "\n".join(
        json.dumps({"query": "SELECT * FROM t WHERE x = %d" % i}) for i in range(3)
    )
    resp = client.post("/queries/batch", content=lines, headers=ANN)
    assert resp.status_code == 200
    assert resp.json() == {"ingested": 3}


def test_batch_reports_bad_lines_and_keeps_going(client):
    lines = "\n".join(
        [
            json.dumps({"query": "SELECT * FROM t"}),
            "",
            "not json",
            json.dumps({"query": "SELECT * FROM u"}),
            json.dumps({"query": "   "}),
        ]
    )
    resp = client.post("/queries/batch", content=lines, headers=ANN)
    body = resp.json()
    assert body["ingested"] == 2
    assert [e["line"] for e in body["errors"]] == [3, 5]


def test_batch_lines_default_to_the_caller(client):
    client.post(
        "/queries/batch",
        content=json.dumps({"query": "SELECT * FROM t"}),
        headers=ANN,
    )
    body = client.get("/queries/1", headers=ANN).json()
    assert body["owner"] == "ann"


def test_profile_summary_attached_to_view(client):
    rows = [["Lake %d" % i, i] for i in range(10)]
    qid = post_query(
        client,
        "SELECT lake, temp FROM WaterTemperature",
        exec_ms=7_200_000,
        output=rows,
        columns=["lake", "temp"],
    )
    body = client.get("/queries/" + qid, headers=ANN).json()
    assert body["summary"]["mode"] == "full"
    assert len(body["summary"]["tuples"]) == 10
    assert body["summary"]["columns"] == ["lake", "temp"]
    assert body["result_cardinality"] == 10


# --- authentication ---


@pytest.mark.parametrize(
    "method,path",
    [
        ("get", "/queries/1"),
        ("post", "/queries"),
        ("get", "/suggest"),
        ("post", "/search"),
        ("get", "/admin/report"),
    ],
)
def test_missing_principal_is_unauthorized(client, method, path):
    resp = getattr(client, method)(path)
    assert resp.status_code == 401
    assert resp.json() == {"error": "missing X-Principal header"}


def test_anonymous_mode_skips_the_header(tmp_path):
    eng = Engine(tmp_path / "store", ServiceConfig(auth_mode="none"))
    try:
        anon = TestClient(create_app(eng))
        qid = post_query(anon, "SELECT * FROM t", headers={})
        assert anon.get("/queries/" + qid).json()["owner"] == "anonymous"
    finally:
        eng.close()


def test_config_rejects_unknown_auth_mode():
    with pytest.raises(ValueError):
        ServiceConfig(auth_mode="cookie").validate()


# --- visibility and ownership ---


def test_unknown_query_is_404(client):
    resp = client.get("/queries/99", headers=ANN)
    assert resp.status_code == 404
    assert resp.json() == {"error": "no query 99"}


def test_non_numeric_id_reads_as_absent(client):
    assert client.get("/queries/abc", headers=ANN).status_code == 404


def test_private_query_looks_nonexistent_to_others(client):
    qid = post_query(client, "SELECT * FROM t")
    client.put(
        "/queries/%s/access" % qid, json={"visibility": "private"}, headers=ANN
    )
    assert client.get("/queries/" + qid, headers=ANN).status_code == 200
    hidden = client.get("/queries/" + qid, headers=TOM)
    missing = client.get("/queries/99", headers=TOM)
    assert hidden.status_code == missing.status_code == 404
    # identical shape: nothing distinguishes hidden from absent but the id
    assert hidden.json()["error"].replace(qid, "99") == missing.json()["error"]


def test_group_query_hidden_outside_the_group(client):
    qid = post_query(client, "SELECT * FROM t")
    assert client.get("/queries/" + qid, headers=TOM).status_code == 200
    assert client.get("/queries/" + qid, headers=EVE).status_code == 404


def test_public_query_visible_to_anyone(client):
    qid = post_query(client, "SELECT * FROM t")
    client.put("/queries/%s/access" % qid, json={"visibility": "public"}, headers=ANN)
    assert client.get("/queries/" + qid, headers=EVE).status_code == 200


def test_only_the_owner_deletes(client):
    qid = post_query(client, "SELECT * FROM t")
    resp = client.delete("/queries/" + qid, headers=TOM)
    assert resp.status_code == 403
    assert resp.json() == {"error": "only the owner may delete a query"}
    assert client.delete("/queries/" + qid, headers=ANN).json() == {
        "ok": True,
        "qid": qid,
    }
    assert client.get("/queries/" + qid, headers=ANN).status_code == 404
    assert client.delete("/queries/" + qid, headers=ANN).status_code == 404


def test_only_the_owner_changes_access(client):
    qid = post_query(client, "SELECT * FROM t")
    resp = client.put(
        "/queries/%s/access" % qid, json={"visibility": "public"}, headers=TOM
    )
    assert resp.status_code == 403


def test_unknown_visibility_rejected(client):
    qid = post_query(client, "SELECT * FROM t")
    resp = client.put(
        "/queries/%s/access" % qid, json={"visibility": "sneaky"}, headers=ANN
    )
    assert resp.status_code == 400


# --- search ---


def test_partial_query_search(client):
    qids = seed(client)
    resp = client.post(
        "/search",
        json={"partial": "SELECT FROM WaterSalinity, WaterTemperature,"},
        headers=ANN,
    )
    found = {row["qid"] for row in resp.json()["results"]}
    assert found == {qids["wide"], qids["narrow"]}


def test_feature_search_body(client):
    qids = seed(client)
    resp = client.post(
        "/search",
        json={"type": "feature", "where": {"references-relation": "citylocations"}},
        headers=ANN,
    )
    assert [row["qid"] for row in resp.json()["results"]] == [qids["city"]]


def test_search_row_shape(client):
    seed(client)
    row = client.post(
        "/search",
        json={"type": "substring", "text": "CityLocations"},
        headers=ANN,
    ).json()["results"][0]
    assert set(row) == {
        "qid",
        "score",
        "certainty",
        "preview",
        "owner",
        "validity",
        "cluster",
    }


def test_search_respects_limit(client):
    seed(client)
    resp = client.post(
        "/search",
        json={"type": "feature", "where": {"references-relation": "watersalinity"},
              "limit": 1},
        headers=ANN,
    )
    assert len(resp.json()["results"]) == 1


def test_search_never_returns_invisible_queries(client):
    seed(client)
    resp = client.post(
        "/search",
        json={"type": "feature", "where": {"references-relation": "watersalinity"}},
        headers=EVE,
    )
    assert resp.json() == {"results": []}


@pytest.mark.parametrize(
    "body",
    [
        {"type": "bogus"},
        {"type": "feature"},
        {"type": "feature", "where": {"made-up": 1}},
        {},
    ],
)
def test_malformed_search_is_a_user_error(client, body):
    assert client.post("/search", json=body, headers=ANN).status_code == 400


def test_knn_search_is_self_inclusive(client):
    # the raw knn condition is a pure nearest-k: the anchor scores 1.0
    qids = seed(client)
    resp = client.post(
        "/search",
        json={"type": "knn", "qid": qids["wide"], "k": 2},
        headers=ANN,
    )
    found = [row["qid"] for row in resp.json()["results"]]
    assert found == [qids["wide"], qids["narrow"]]


# --- suggestions, corrections, recommendations ---


def test_suggest_is_empty_before_mining(client):
    seed(client)
    resp = client.get("/suggest?partial=SELECT FROM Wat", headers=ANN)
    assert resp.json() == {"completions": []}


def test_mine_then_suggest(client):
    seed(client)
    assert client.post("/admin/mine", headers=ANN).status_code == 200
    resp = client.get(
        "/suggest?partial=SELECT FROM Wat&kind=relation&limit=5", headers=ANN
    )
    names = [c["name"] for c in resp.json()["completions"]]
    assert set(names) == {"watersalinity", "watertemperature"}
    assert all(c["kind"] == "relation" for c in resp.json()["completions"])


def test_suggest_limit(client):
    seed(client)
    client.post("/admin/mine", headers=ANN)
    resp = client.get("/suggest?partial=&limit=2", headers=ANN)
    assert len(resp.json()["completions"]) == 2


def test_identifier_corrections(client):
    seed(client)
    resp = client.post(
        "/corrections",
        json={"query": "SELECT * FROM WaterSalinty", "signal": {}},
        headers=ANN,
    )
    out = resp.json()["corrections"]
    assert [(c["kind"], c["suggestion"]) for c in out] == [
        ("identifier", "watersalinity")
    ]


def test_empty_result_corrections(client):
    seed(client)
    post_query(
        client,
        "SELECT * FROM CityLocations WHERE population > 100",
        ts=13_000,
        rows_out=40,
    )
    resp = client.post(
        "/corrections",
        json={
            "query": "SELECT * FROM CityLocations WHERE population > 99999999",
            "signal": {"result_cardinality": 0},
        },
        headers=ANN,
    )
    out = resp.json()["corrections"]
    assert ("predicate", "population > 100") in {
        (c["kind"], c["suggestion"]) for c in out
    }


def test_recommendations_endpoint(client):
    qids = seed(client)
    resp = client.get("/recommend?recent=%s&k=2" % qids["wide"], headers=ANN)
    rows = resp.json()["recommendations"]
    assert rows and all(
        set(row) == {"qid", "score", "components", "preview"} for row in rows
    )
    assert qids["wide"] not in {row["qid"] for row in rows}


def test_recommend_with_invisible_base_is_404(client):
    seed(client)
    secret = post_query(client, "SELECT * FROM t", headers={"X-Principal": "bob"})
    client.put(
        "/queries/%s/access" % secret,
        json={"visibility": "private"},
        headers={"X-Principal": "bob"},
    )
    assert client.get("/recommend?recent=" + secret, headers=ANN).status_code == 404


# --- sessions and annotations ---


def test_sessions_empty_before_mining(client):
    seed(client)
    assert client.get("/sessions/ann", headers=ANN).json() == {
        "user": "ann",
        "sessions": [],
    }


def test_sessions_render_nodes_and_labeled_edges(client):
    qids = seed(client)
    retry = post_query(
        client, "SELECT city FROM CityLocations WHERE population > 200", ts=14_000
    )
    client.post("/admin/mine", headers=ANN)
    body = client.get("/sessions/ann", headers=ANN).json()
    for session in body["sessions"]:
        assert all(
            set(n) == {"qid", "preview", "raw_text", "submitted_at"}
            for n in session["nodes"]
        )
        assert all(set(e) == {"from", "to", "type", "labels"} for e in session["edges"])
    (tuning,) = [
        s for s in body["sessions"] if {n["qid"] for n in s["nodes"]} == {qids["city"], retry}
    ]
    (edge,) = tuning["edges"]
    assert edge["from"] == qids["city"] and edge["to"] == retry
    assert edge["type"] == "modification"
    assert edge["labels"] == ["population > 100 -> population > 200"]


def test_sessions_of_other_users_respect_visibility(client):
    seed(client)
    client.post("/admin/mine", headers=ANN)
    mine_view = client.get("/sessions/ann", headers=ANN).json()
    team_view = client.get("/sessions/ann", headers=TOM).json()
    assert mine_view["sessions"] == team_view["sessions"]
    out_view = client.get("/sessions/ann", headers=EVE).json()
    assert out_view["sessions"] == []


def test_annotation_lands_in_the_view(client):
    text = "SELECT * FROM WaterTemperature WHERE temp > 18"
    span = [text.index("18"), text.index("18") + 2]
    qid = post_query(client, text)
    resp = client.post(
        "/annotations",
        json={"qid": qid, "text": "calibration baseline", "span": span},
        headers=TOM,
    )
    assert resp.json() == {"ok": True, "qid": qid}
    notes = client.get("/queries/" + qid, headers=ANN).json()["annotations"]
    assert [(n["author"], n["text"], n["span"]) for n in notes] == [
        ("tom", "calibration baseline", span)
    ]


def test_annotating_invisible_query_is_404(client):
    qid = post_query(client, "SELECT * FROM t")
    client.put("/queries/%s/access" % qid, json={"visibility": "private"}, headers=ANN)
    resp = client.post(
        "/annotations", json={"qid": qid, "text": "hm"}, headers=TOM
    )
    assert resp.status_code == 404


def test_annotation_span_must_fit_the_text(client):
    qid = post_query(client, "SELECT * FROM t")
    resp = client.post(
        "/annotations",
        json={"qid": qid, "text": "x", "span": [0, 10_000]},
        headers=ANN,
    )
    assert resp.status_code == 400


# --- schema and admin ---


def test_schema_names_normalized_to_lowercase(client):
    client.post(
        "/schema",
        json={"relations": {"WaterTemperature": [["Lake", "text"]]}},
        headers=ANN,
    )
    qid = post_query(client, "SELECT lake FROM watertemperature")
    body = client.get("/queries/" + qid, headers=ANN).json()
    assert body["validity"] == "valid"


def test_schema_body_needs_relations(client):
    assert client.post("/schema", json={}, headers=ANN).status_code == 400


def test_admin_mine_reports(client):
    seed(client)
    body = client.post("/admin/mine", headers=ANN).json()
    assert set(body) == {
        "sessions_assigned",
        "edges_added",
        "sessions_total",
        "rules_mined",
        "clusters",
        "model_version",
    }
    assert body["sessions_total"] >= 1


def test_admin_maintain_reports(client):
    seed(client)
    body = client.post("/admin/maintain", headers=ANN).json()
    assert set(body) == {"checked", "skipped", "flagged", "unflagged", "stale"}


def test_admin_report_counts(client):
    qids = seed(client)
    client.post("/admin/mine", headers=ANN)
    client.delete("/queries/" + qids["city"], headers=ANN)
    body = client.get("/admin/report", headers=ANN).json()
    assert body["queries"] == 2
    assert body["by_validity"]["deleted"] == 1
    assert body["owners"] == 1
    assert body["schemas"] == 1
    assert body["model_version"] == "1"


def test_read_endpoints_leave_the_log_alone(client):
    qids = seed(client)
    client.post("/admin/mine", headers=ANN)
    seq = client.get("/admin/report", headers=ANN).json()["seq"]
    client.get("/queries/" + qids["wide"], headers=ANN)
    client.post(
        "/search",
        json={"type": "feature", "where": {"references-relation": "watersalinity"}},
        headers=ANN,
    )
    client.get("/suggest?partial=SELECT FROM Wat", headers=ANN)
    client.get("/sessions/ann", headers=ANN)
    client.get("/recommend?recent=%s&k=2" % qids["wide"], headers=ANN)
    client.post(
        "/corrections", json={"query": "SELECT * FROM WaterSalinty"}, headers=ANN
    )
    assert client.get("/admin/report", headers=ANN).json()["seq"] == seq


def test_cross_origin_reads_allowed(client):
    resp = client.get(
        "/admin/report", headers={**ANN, "Origin": "http://localhost:5173"}
    )
    assert resp.headers["access-control-allow-origin"] == "*"


def test_responses_are_compact_sorted_json(client):
    qid = post_query(client, "SELECT * FROM t")
    resp = client.get("/queries/" + qid, headers=ANN)
    assert resp.text == to_json(resp.json())
    assert resp.headers["content-type"] == "application/json"
