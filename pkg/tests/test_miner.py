"""Workload mining: sessions, rules, clusters, and the advice built on them."""
import itertools
import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cqms.errors import NotFound
from cqms.miner import (
    EMPTY_MODEL,
    MinerConfig,
    Rule,
    apriori,
    build_model,
    cluster_queries,
    edit_distance,
    merge_features,
    mine,
    recommend_queries,
    segment_sessions,
    sessions_of,
    split_prefix,
    suggest_completions,
    suggest_corrections,
)
from cqms.sql import similarity
from cqms.sql.canon import PARAM
from cqms.sql.diff import ADD_PREDICATE, ADD_RELATION, CHANGE_CONSTANT
from cqms.sql.features import FeatureSet
from cqms.store import (
    MODIFICATION,
    PRIVATE,
    TEMPORAL,
    AccessChanged,
    Principal,
    QueryDeleted,
    QueryStore,
    SchemaAdded,
)

from conftest import add_query
from strategies import feature_set, query_text

ANN = Principal.of("ann", ["limno"])
TOM = Principal.of("tom", ["limno"])
EVE = Principal.of("eve", [])


# --- session segmentation ---

# one analyst narrowing in: widen the join, tune the threshold twice, then
# stack on two more filters
TRAIL = [
    "SELECT * FROM WaterTemperature WHERE temp > 20",
    "SELECT * FROM WaterTemperature, WaterSalinity WHERE temp > 20",
    "SELECT * FROM WaterTemperature, WaterSalinity WHERE temp > 15",
    "SELECT * FROM WaterTemperature, WaterSalinity WHERE temp > 18",
    "SELECT * FROM WaterTemperature, WaterSalinity WHERE temp > 18 AND salinity < 2",
    "SELECT * FROM WaterTemperature, WaterSalinity"
    " WHERE temp > 18 AND salinity < 2 AND lake = 'Lake Union'",
]


@pytest.fixture
def trail_store(lakes_store):
    qids = [add_query(lakes_store, text) for text in TRAIL]
    segment_sessions(lakes_store)
    return lakes_store, qids


def test_refinement_trail_is_one_session(trail_store):
    store, qids = trail_store
    sessions = sessions_of(store, "ann", ANN)
    assert len(sessions) == 1
    assert sessions[0]["session_id"] == "ann:0"
    assert sessions[0]["qids"] == qids
    assert len(sessions[0]["edges"]) == 5


def test_refinement_trail_edge_scripts(trail_store):
    store, _qids = trail_store
    edges = sessions_of(store, "ann", ANN)[0]["edges"]
    assert all(e.edge_type == MODIFICATION for e in edges)
    kinds = [[edit.kind for edit in e.edit_script] for e in edges]
    assert kinds == [
        [ADD_RELATION],
        [CHANGE_CONSTANT],
        [CHANGE_CONSTANT],
        [ADD_PREDICATE],
        [ADD_PREDICATE],
    ]
    assert edges[2].edit_script[0].payload["new"] == 18
    labels = [e.edit_script[0].label() for e in edges]
    assert labels == [
        "+ relation watersalinity",
        "temp > 20 -> temp > 15",
        "temp > 15 -> temp > 18",
        "+ salinity < 2",
        "+ lake = 'Lake Union'",
    ]


def test_segmenting_twice_writes_nothing(trail_store):
    store, _qids = trail_store
    before = store.seq
    report = segment_sessions(store)
    assert report.sessions_assigned == 0
    assert report.edges_added == 0
    assert report.sessions_total == 1
    assert store.seq == before


@pytest.mark.parametrize("gap,expected_sessions", [(600_000, 1), (600_001, 2)])
def test_time_gap_splits_sessions(lakes_store, gap, expected_sessions):
    text = "SELECT * FROM WaterTemperature WHERE temp > 20"
    add_query(lakes_store, text, ts=10_000)
    add_query(lakes_store, text, ts=10_000 + gap)
    report = segment_sessions(lakes_store)
    assert report.sessions_total == expected_sessions
    assert len(sessions_of(lakes_store, "ann", ANN)) == expected_sessions


def test_dissimilar_neighbors_split_sessions(lakes_store):
    add_query(lakes_store, "SELECT * FROM WaterTemperature WHERE temp > 20", ts=10_000)
    add_query(lakes_store, "SELECT city FROM CityLocations WHERE population > 5", ts=11_000)
    segment_sessions(lakes_store)
    sessions = sessions_of(lakes_store, "ann", ANN)
    assert [s["session_id"] for s in sessions] == ["ann:0", "ann:1"]
    assert all(s["edges"] == [] for s in sessions)


def test_identical_neighbors_link_with_temporal_edge(lakes_store):
    text = "SELECT * FROM WaterTemperature WHERE temp > 20"
    add_query(lakes_store, text, ts=10_000)
    add_query(lakes_store, text, ts=11_000)
    segment_sessions(lakes_store)
    (session,) = sessions_of(lakes_store, "ann", ANN)
    (edge,) = session["edges"]
    assert edge.edge_type == TEMPORAL
    assert edge.edit_script == ()


def test_single_query_is_its_own_session(lakes_store):
    qid = add_query(lakes_store, "SELECT * FROM WaterTemperature")
    report = segment_sessions(lakes_store)
    assert report.sessions_total == 1
    (session,) = sessions_of(lakes_store, "ann", ANN)
    assert session["qids"] == [qid]
    assert session["edges"] == []


def test_users_segment_independently(lakes_store):
    text = "SELECT * FROM WaterTemperature WHERE temp > 20"
    add_query(lakes_store, text, user="ann", ts=10_000)
    add_query(lakes_store, text, user="bob", ts=10_500)
    add_query(lakes_store, text, user="ann", ts=11_000)
    report = segment_sessions(lakes_store)
    assert report.sessions_total == 2
    (ann_session,) = sessions_of(lakes_store, "ann", ANN)
    assert ann_session["session_id"] == "ann:0"
    assert len(ann_session["qids"]) == 2
    assert len(ann_session["edges"]) == 1
    (bob_session,) = sessions_of(lakes_store, "bob", Principal.of("bob", ["limno"]))
    assert bob_session["session_id"] == "bob:0"


def test_gap_threshold_is_configurable(lakes_store):
    text = "SELECT * FROM WaterTemperature WHERE temp > 20"
    add_query(lakes_store, text, ts=10_000)
    add_query(lakes_store, text, ts=11_000)
    report = segment_sessions(lakes_store, MinerConfig(session_gap_ms=500))
    assert report.sessions_total == 2


def test_sessions_listed_in_order(lakes_store):
    text = "SELECT * FROM WaterTemperature WHERE temp > 20"
    for i in range(3):
        add_query(lakes_store, text, ts=10_000 + i * 700_000)
    segment_sessions(lakes_store)
    sessions = sessions_of(lakes_store, "ann", ANN)
    assert [s["session_id"] for s in sessions] == ["ann:0", "ann:1", "ann:2"]


def test_sessions_of_hides_invisible_steps(lakes_store):
    text = "SELECT * FROM WaterTemperature WHERE temp > 20"
    q1 = add_query(lakes_store, text, ts=10_000)
    q2 = add_query(lakes_store, text, ts=11_000)
    q3 = add_query(lakes_store, text, ts=12_000)
    segment_sessions(lakes_store)
    lakes_store.append(AccessChanged(qid=q2, visibility=PRIVATE))
    (mine_view,) = sessions_of(lakes_store, "ann", ANN)
    assert mine_view["qids"] == [q1, q2, q3]
    assert len(mine_view["edges"]) == 2
    (team_view,) = sessions_of(lakes_store, "ann", TOM)
    assert team_view["qids"] == [q1, q3]
    # the q1->q2 and q2->q3 edges are not shown stitched together
    assert team_view["edges"] == []


def test_deleted_steps_drop_out_on_resegment(lakes_store):
    text = "SELECT * FROM WaterTemperature WHERE temp > %d"
    q1 = add_query(lakes_store, text % 20, ts=10_000)
    q2 = add_query(lakes_store, text % 15, ts=11_000)
    q3 = add_query(lakes_store, text % 18, ts=12_000)
    segment_sessions(lakes_store)
    lakes_store.append(QueryDeleted(qid=q2))
    segment_sessions(lakes_store)
    (session,) = sessions_of(lakes_store, "ann", ANN)
    assert session["qids"] == [q1, q3]
    (edge,) = session["edges"]
    assert edge.from_qid == q1 and edge.to_qid == q3
    assert [e.kind for e in edge.edit_script] == [CHANGE_CONSTANT]


@given(
    texts=st.lists(query_text(), min_size=1, max_size=6),
    gaps=st.lists(st.integers(0, 1_200_000), min_size=6, max_size=6),
)
@settings(max_examples=25, deadline=None)
def test_resegmenting_unchanged_store_is_idempotent(tmp_path_factory, texts, gaps):
    store = QueryStore(tmp_path_factory.mktemp("seg") / "store")
    try:
        ts = 10_000
        for text, gap in zip(texts, gaps):
            add_query(store, text, ts=ts)
            ts += gap
        first = segment_sessions(store)
        seq = store.seq
        second = segment_sessions(store)
        assert second.sessions_assigned == 0
        assert second.edges_added == 0
        assert second.sessions_total == first.sessions_total
        assert store.seq == seq
    finally:
        store.close()


# --- association rules ---


def enumerate_rules(itemsets, min_support, min_confidence):
    """Reference miner: count every subset of the item universe directly."""
    n = len(itemsets)
    if n == 0:
        return []
    universe = sorted({item for s in itemsets for item in s})
    min_count = max(1, math.ceil(min_support * n))
    frequent = {}
    for size in range(1, len(universe) + 1):
        for combo in itertools.combinations(universe, size):
            members = set(combo)
            count = sum(1 for s in itemsets if members <= set(s))
            if count >= min_count:
                frequent[frozenset(combo)] = count
    rules = []
    for iset, count in frequent.items():
        if len(iset) < 2:
            continue
        for consequent in iset:
            antecedent = iset - {consequent}
            if antecedent not in frequent:
                continue
            confidence = count / frequent[antecedent]
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


BASKETS = [("a", "b"), ("a", "b"), ("a",), ("b", "c")]


def test_rule_support_and_confidence_by_hand():
    rules = apriori(BASKETS, min_support=0.25, min_confidence=0.6)
    assert rules == [
        Rule(antecedent=("a",), consequent="b", support=0.5, confidence=2 / 3),
        Rule(antecedent=("b",), consequent="a", support=0.5, confidence=2 / 3),
        Rule(antecedent=("c",), consequent="b", support=0.25, confidence=1.0),
    ]


def test_min_support_prunes_rare_itemsets():
    rules = apriori(BASKETS, min_support=0.3, min_confidence=0.6)
    assert {(r.antecedent, r.consequent) for r in rules} == {(("a",), "b"), (("b",), "a")}


def test_min_confidence_prunes_weak_rules():
    rules = apriori(BASKETS, min_support=0.25, min_confidence=0.7)
    assert rules == [Rule(antecedent=("c",), consequent="b", support=0.25, confidence=1.0)]


def test_rules_sorted_by_support_then_name():
    rules = apriori(BASKETS, min_support=0.25, min_confidence=0.6)
    supports = [r.support for r in rules]
    assert supports == sorted(supports, reverse=True)


def test_no_itemsets_no_rules():
    assert apriori([], min_support=0.1, min_confidence=0.5) == []


def test_triple_itemset_yields_two_item_antecedents():
    rules = apriori([("x", "y", "z")] * 3, min_support=0.5, min_confidence=1.0)
    assert len(rules) == 9
    assert all(r.support == 1.0 and r.confidence == 1.0 for r in rules)
    pairs = {(r.antecedent, r.consequent) for r in rules}
    assert (("y", "z"), "x") in pairs
    assert (("x", "y"), "z") in pairs


def test_repeated_itemsets_count_individually():
    # 5 of 8 baskets carry {a,b}: support must reflect raw multiplicity
    itemsets = [("a", "b")] * 5 + [("c",)] * 3
    rules = apriori(itemsets, min_support=0.5, min_confidence=0.5)
    assert {(r.antecedent, r.consequent, r.support) for r in rules} == {
        (("a",), "b", 0.625),
        (("b",), "a", 0.625),
    }


@given(
    itemsets=st.lists(
        st.lists(st.sampled_from("abcdef"), min_size=1, max_size=4, unique=True),
        min_size=1,
        max_size=20,
    ),
    min_support=st.sampled_from([0.125, 0.25, 0.5]),
    min_confidence=st.sampled_from([0.5, 0.75, 1.0]),
)
@settings(max_examples=120, deadline=None)
def test_apriori_matches_power_set_enumeration(itemsets, min_support, min_confidence):
    assert apriori(itemsets, min_support, min_confidence) == enumerate_rules(
        itemsets, min_support, min_confidence
    )


# --- clustering ---


def template_rep(fs: FeatureSet) -> FeatureSet:
    return FeatureSet(
        data_sources=fs.data_sources,
        attributes=fs.attributes,
        predicates=frozenset((a, r, op, PARAM) for a, r, op, _c in fs.predicates),
        join_pairs=fs.join_pairs,
        aggregates=fs.aggregates,
        comparison_attrs=fs.comparison_attrs,
        has_subquery=fs.has_subquery,
    )


def component_clusters(store, threshold):
    """Reference grouping: breadth-first components of the threshold graph."""
    recs = {q: r for q, r in store.queries.items() if r.validity != "deleted"}
    reps = {q: template_rep(r.features) for q, r in recs.items()}
    qids = sorted(recs)
    adjacent = {q: [] for q in qids}
    for i, a in enumerate(qids):
        for b in qids[i + 1:]:
            same_template = (
                recs[a].template_text is not None
                and recs[a].template_text == recs[b].template_text
            )
            if same_template or similarity(reps[a], reps[b]) >= threshold:
                adjacent[a].append(b)
                adjacent[b].append(a)
    labels = {}
    for start in qids:
        if start in labels:
            continue
        component = {start}
        frontier = [start]
        while frontier:
            node = frontier.pop()
            for nxt in adjacent[node]:
                if nxt not in component:
                    component.add(nxt)
                    frontier.append(nxt)
        for q in component:
            labels[q] = min(component)
    return labels


def test_shared_template_shares_cluster(lakes_store):
    q1 = add_query(lakes_store, "SELECT * FROM WaterTemperature WHERE temp > 20")
    q2 = add_query(lakes_store, "SELECT * FROM WaterTemperature WHERE temp > 15")
    clusters = cluster_queries(lakes_store)
    assert clusters[q1] == clusters[q2] == q1


def test_threshold_decides_cross_template_merges(lakes_store):
    # reps share the source but nothing else: one of three components matches
    q1 = add_query(lakes_store, "SELECT * FROM WaterTemperature WHERE temp > 20")
    q2 = add_query(lakes_store, "SELECT * FROM WaterTemperature")
    low = cluster_queries(lakes_store, threshold=0.3)
    assert low[q1] == low[q2]
    high = cluster_queries(lakes_store, threshold=0.6)
    assert high[q1] != high[q2]


def test_cluster_label_is_smallest_member(lakes_store):
    qids = [
        add_query(lakes_store, "SELECT * FROM WaterTemperature WHERE temp > %d" % k)
        for k in (20, 15, 18)
    ]
    clusters = cluster_queries(lakes_store)
    assert {clusters[q] for q in qids} == {qids[0]}


def test_deleted_queries_leave_clusters(lakes_store):
    q1 = add_query(lakes_store, "SELECT * FROM WaterTemperature WHERE temp > 20")
    q2 = add_query(lakes_store, "SELECT * FROM WaterTemperature WHERE temp > 15")
    lakes_store.append(QueryDeleted(qid=q1))
    clusters = cluster_queries(lakes_store)
    assert q1 not in clusters
    assert clusters[q2] == q2


def test_unparsed_queries_cluster_together(lakes_store):
    q1 = add_query(lakes_store, "FETCH THE WARM LAKES")
    q2 = add_query(lakes_store, "WARM LAKES PLEASE")
    clusters = cluster_queries(lakes_store)
    assert clusters[q1] == clusters[q2]


def test_new_queries_invalidate_cluster_cache(lakes_store):
    add_query(lakes_store, "SELECT * FROM WaterTemperature WHERE temp > 20")
    first = cluster_queries(lakes_store)
    q2 = add_query(lakes_store, "SELECT * FROM CityLocations")
    second = cluster_queries(lakes_store)
    assert q2 not in first
    assert q2 in second


@given(
    texts=st.lists(query_text(), min_size=1, max_size=7),
    threshold=st.sampled_from([0.25, 0.5, 0.75]),
)
@settings(max_examples=30, deadline=None)
def test_clustering_matches_connected_components(tmp_path_factory, texts, threshold):
    store = QueryStore(tmp_path_factory.mktemp("clust") / "store")
    try:
        for text in texts:
            add_query(store, text)
        assert cluster_queries(store, threshold) == component_clusters(store, threshold)
    finally:
        store.close()


# --- suggestion model ---


@pytest.fixture
def advice(lakes_store):
    """CityLocations dominates the log, but WaterTemperature dominates the
    company WaterSalinity keeps."""
    for i in range(10):
        add_query(lakes_store, "SELECT * FROM CityLocations WHERE population > %d" % (i * 10))
    for i in range(4):
        add_query(
            lakes_store,
            "SELECT * FROM WaterSalinity, WaterTemperature WHERE salinity < %d" % (i + 1),
        )
    add_query(lakes_store, "SELECT * FROM WaterSalinity")
    return lakes_store, build_model(lakes_store)


def test_model_counts_match_hand_recount(advice):
    store, model = advice
    expected_items: dict = {}
    expected_pairs: dict = {}
    for rec in store.queries.values():
        if rec.validity == "deleted" or not rec.parsed:
            continue
        items = sorted(rec.features.items())
        for item in items:
            expected_items[item] = expected_items.get(item, 0) + 1
        for pair in itertools.combinations(items, 2):
            expected_pairs[pair] = expected_pairs.get(pair, 0) + 1
    assert model.item_counts == expected_items
    assert model.pair_counts == expected_pairs
    assert model.query_count == 15


def test_model_skips_raw_and_deleted_queries(lakes_store):
    add_query(lakes_store, "SELECT * FROM WaterTemperature")
    add_query(lakes_store, "NOT EVEN CLOSE TO A QUERY")
    gone = add_query(lakes_store, "SELECT * FROM CityLocations")
    lakes_store.append(QueryDeleted(qid=gone))
    model = build_model(lakes_store)
    assert model.query_count == 1
    assert "src:citylocations" not in model.item_counts


def test_model_carries_schema_names(advice):
    _store, model = advice
    assert set(model.schema_relations) == {
        "watertemperature",
        "watersalinity",
        "citylocations",
    }
    assert model.schema_relations["citylocations"] == ("city", "lake", "population")


def test_model_serializes_to_json(advice):
    _store, model = advice
    body = json.loads(json.dumps(model.to_json()))
    assert body["query_count"] == 15
    assert all("|" in key for key in body["pair_counts"])
    assert body["schema_relations"]["watersalinity"] == ["lake", "salinity", "day"]


def test_mine_reports_whole_pass(advice):
    store, model = advice
    report, fresh = mine(store)
    assert report.rules_mined == len(fresh.rules)
    assert report.clusters == len(set(cluster_queries(store).values()))
    assert report.model_version == fresh.version == "1"
    assert report.sessions_total >= 1
    assert set(report.to_json()) == {
        "sessions_assigned",
        "edges_added",
        "sessions_total",
        "rules_mined",
        "clusters",
        "model_version",
    }


# --- completions ---


def completion_names(completions, kind="relation"):
    return [c.name for c in completions if c.kind == kind]


def test_context_outranks_global_popularity(advice):
    _store, model = advice
    names = completion_names(suggest_completions(model, "SELECT FROM WaterSalinity,"))
    assert names.index("watertemperature") < names.index("citylocations")


def test_empty_context_ranks_by_global_popularity(advice):
    _store, model = advice
    names = completion_names(suggest_completions(model, ""))
    assert names[0] == "citylocations"


def test_conditional_pick_rides_on_rule_confidence(advice):
    _store, model = advice
    picks = suggest_completions(model, "SELECT FROM WaterSalinity,")
    by_name = {(c.kind, c.name): c for c in picks}
    warm = by_name[("relation", "watertemperature")]
    assert warm.tier == 1
    assert warm.score == pytest.approx(0.8)  # 4 of the 5 salinity queries
    assert by_name[("relation", "citylocations")].tier == 3


def test_cooccurrence_backs_up_missing_rules(advice):
    store, _model = advice
    # support floor above every itemset: no rules survive, pairs still do
    model = build_model(store, MinerConfig(min_support=0.99))
    assert model.rules == ()
    picks = suggest_completions(model, "SELECT FROM WaterSalinity,")
    by_name = {(c.kind, c.name): c for c in picks}
    warm = by_name[("relation", "watertemperature")]
    assert warm.tier == 2
    assert warm.score == pytest.approx(0.8)
    names = completion_names(picks)
    assert names.index("watertemperature") < names.index("citylocations")


def test_half_typed_word_filters_by_prefix(advice):
    _store, model = advice
    names = completion_names(suggest_completions(model, "SELECT FROM Wat"))
    assert names and set(names) <= {"watersalinity", "watertemperature"}


def test_context_names_are_not_resuggested(advice):
    _store, model = advice
    names = completion_names(suggest_completions(model, "SELECT FROM WaterSalinity,"))
    assert "watersalinity" not in names


def test_limit_caps_suggestions(advice):
    _store, model = advice
    assert len(suggest_completions(model, "", limit=3)) == 3


def test_unlogged_schema_names_still_offered(lakes_store):
    model = build_model(lakes_store)
    picks = suggest_completions(model, "", limit=20)
    assert {c.name for c in picks if c.kind == "relation"} == {
        "watertemperature",
        "watersalinity",
        "citylocations",
    }
    assert all(c.tier == 4 and c.score == 0.0 for c in picks)
    # attributes shared across relations appear once
    assert completion_names(picks, kind="attribute").count("lake") == 1


def test_empty_model_suggests_nothing():
    assert suggest_completions(EMPTY_MODEL, "SELECT FROM WaterSalinity,") == []


def test_unparsable_context_falls_back_to_global(advice):
    _store, model = advice
    broken = suggest_completions(model, "SELEC * FRO CityLocations WHERE")
    assert broken == suggest_completions(model, "")


def test_completion_json_shape(advice):
    _store, model = advice
    body = suggest_completions(model, "SELECT FROM WaterSalinity,")[0].to_json()
    assert set(body) == {"name", "kind", "score", "tier"}


@pytest.mark.parametrize(
    "text,expected",
    [
        ("SELECT FROM Wat", ("SELECT FROM ", "wat")),
        ("SELECT FROM WaTer", ("SELECT FROM ", "water")),
        ("SELECT FROM w_1", ("SELECT FROM ", "w_1")),
        ("SELECT ", ("SELECT ", "")),
        ("SELECT", ("SELECT", "")),
        ("SELECT * FROM t WHERE x > 18", ("SELECT * FROM t WHERE x > 18", "")),
        ("SELECT FROM t,", ("SELECT FROM t,", "")),
        ("", ("", "")),
    ],
)
def test_split_prefix_cases(text, expected):
    assert split_prefix(text) == expected


# --- corrections ---


def test_identifier_typo_draws_nearby_relation(advice):
    store, model = advice
    out = suggest_corrections(store, model, "SELECT * FROM WaterSalinty")
    assert [(c.kind, c.original, c.suggestion) for c in out] == [
        ("identifier", "watersalinty", "watersalinity")
    ]
    assert out[0].score == pytest.approx(0.5)


def test_identifier_candidates_ranked_by_popularity(tmp_path):
    store = QueryStore(tmp_path / "store")
    try:
        store.append(
            SchemaAdded(
                effective_at=1000,
                relations={"events_a": [["x", "int"]], "events_b": [["x", "int"]]},
            )
        )
        for _ in range(3):
            add_query(store, "SELECT * FROM events_a WHERE x > 1")
        add_query(store, "SELECT * FROM events_b")
        model = build_model(store)
        out = suggest_corrections(store, model, "SELECT * FROM events_c")
        assert [c.suggestion for c in out] == ["events_a", "events_b"]
    finally:
        store.close()


def test_attribute_typo_scoped_to_its_relation(advice):
    store, model = advice
    out = suggest_corrections(store, model, "SELECT tem FROM WaterTemperature")
    assert [(c.original, c.suggestion) for c in out] == [("tem", "temp")]


def test_no_near_name_means_no_correction(advice):
    store, model = advice
    assert suggest_corrections(store, model, "SELECT * FROM Zzzzzzz") == []


def test_unparsable_text_yields_no_corrections(advice):
    store, model = advice
    assert suggest_corrections(store, model, "SELEC * FROM") == []


@pytest.fixture
def outcome_log(lakes_store):
    for _ in range(3):
        add_query(lakes_store, "SELECT * FROM WaterTemperature WHERE temp > 20", rows_out=7)
    add_query(lakes_store, "SELECT * FROM WaterTemperature WHERE temp > 15", rows_out=3)
    for rows in (2, 1):
        add_query(lakes_store, "SELECT * FROM WaterTemperature WHERE temp < 5", rows_out=rows)
    add_query(lakes_store, "SELECT * FROM WaterTemperature WHERE temp = 99", rows_out=0)
    return lakes_store, build_model(lakes_store)


def test_empty_result_draws_predicates_that_worked(outcome_log):
    store, model = outcome_log
    out = suggest_corrections(
        store, model, "SELECT * FROM WaterTemperature WHERE temp > 90", result_cardinality=0
    )
    assert [(c.kind, c.original, c.suggestion) for c in out] == [
        ("predicate", "temp > 90", "temp > 20"),
        ("predicate", "temp > 90", "temp < 5"),
        ("predicate", "temp > 90", "temp > 15"),
    ]
    assert [c.score for c in out] == [pytest.approx(1.0), pytest.approx(2 / 3), pytest.approx(1 / 3)]


def test_zero_row_history_never_suggested(outcome_log):
    store, model = outcome_log
    out = suggest_corrections(
        store, model, "SELECT * FROM WaterTemperature WHERE temp > 90", result_cardinality=0
    )
    assert "temp = 99" not in {c.suggestion for c in out}


def test_alternatives_capped_at_three(outcome_log):
    store, model = outcome_log
    add_query(store, "SELECT * FROM WaterTemperature WHERE temp >= 12", rows_out=1)
    model = build_model(store)
    out = suggest_corrections(
        store, model, "SELECT * FROM WaterTemperature WHERE temp > 90", result_cardinality=0
    )
    assert len(out) == 3


def test_rows_present_skips_predicate_advice(outcome_log):
    store, model = outcome_log
    out = suggest_corrections(
        store, model, "SELECT * FROM WaterTemperature WHERE temp > 90", result_cardinality=4
    )
    assert out == []


@pytest.mark.parametrize(
    "a,b,cap,expected",
    [
        ("", "", 3, 0),
        ("a", "", 3, 1),
        ("abc", "abc", 3, 0),
        ("kitten", "sitting", 3, 3),
        ("flaw", "lawn", 3, 2),
        ("aaaa", "zzzz", 2, 3),
        ("a", "aaaaaa", 3, 4),
    ],
)
def test_edit_distance_values(a, b, cap, expected):
    assert edit_distance(a, b, cap=cap) == expected
    assert edit_distance(b, a, cap=cap) == expected


# --- recommendations ---


@given(a=feature_set(), b=feature_set())
@settings(max_examples=50, deadline=None)
def test_merged_features_are_componentwise_unions(a, b):
    merged = merge_features([a, b])
    assert merged.data_sources == a.data_sources | b.data_sources
    assert merged.attributes == a.attributes | b.attributes
    assert merged.predicates == a.predicates | b.predicates
    assert merged.join_pairs == a.join_pairs | b.join_pairs
    assert merged.aggregates == a.aggregates | b.aggregates
    assert merged.has_subquery == (a.has_subquery or b.has_subquery)


def test_merge_of_nothing_is_empty():
    assert merge_features([]) == FeatureSet()


@pytest.fixture
def neighborhood(lakes_store):
    temp = [
        add_query(lakes_store, "SELECT * FROM WaterTemperature WHERE temp > %d" % k)
        for k in (20, 15, 18)
    ]
    salt = add_query(lakes_store, "SELECT * FROM WaterSalinity WHERE salinity < 2")
    city = add_query(lakes_store, "SELECT city FROM CityLocations")
    return lakes_store, temp, salt, city


def test_recommendations_exclude_the_inputs(neighborhood):
    store, temp, _salt, _city = neighborhood
    recs = recommend_queries(store, ANN, [temp[0]], k=5)
    assert temp[0] not in {r.qid for r in recs}
    assert recs[0].qid in set(temp[1:])


def test_recommendations_collapse_near_duplicates(neighborhood):
    store, temp, _salt, _city = neighborhood
    recs = recommend_queries(store, ANN, [temp[0]], k=5)
    assert len({r.qid for r in recs} & set(temp[1:])) == 1


def test_recommendation_count_is_bounded(neighborhood):
    store, temp, _salt, _city = neighborhood
    assert len(recommend_queries(store, ANN, [temp[0]], k=1)) == 1
    # one representative per cluster, never padded with duplicates
    assert len(recommend_queries(store, ANN, [temp[0]], k=50)) == 3


def test_recommendation_accepts_string_ids(neighborhood):
    store, temp, _salt, _city = neighborhood
    by_int = [r.qid for r in recommend_queries(store, ANN, [temp[0]], k=3)]
    by_str = [r.qid for r in recommend_queries(store, ANN, [str(temp[0])], k=3)]
    assert by_int == by_str


def test_invisible_base_looks_nonexistent(neighborhood):
    store, _temp, _salt, _city = neighborhood
    secret = add_query(store, "SELECT * FROM WaterTemperature", user="bob")
    store.append(AccessChanged(qid=secret, visibility=PRIVATE))
    with pytest.raises(NotFound):
        recommend_queries(store, ANN, [secret], k=3)
    with pytest.raises(NotFound):
        recommend_queries(store, ANN, [999], k=3)
