"""Feature extraction: sources, attribute roles, predicates, joins, resolution."""
from hypothesis import given, settings

from cqms.sql import canonicalize, extract_features, parse
from cqms.sql.canon import PARAM
from cqms.sql.features import UNRESOLVED, FeatureSet

from strategies import query_text

SCHEMA = {
    "watertemperature": ["lake", "temp", "day"],
    "watersalinity": ["lake", "salinity", "day"],
    "citylocations": ["city", "lake", "population"],
}


def feats(text: str, schema=None) -> FeatureSet:
    return extract_features(canonicalize(parse(text)), schema)


def test_sources_from_from_clause():
    fs = feats("SELECT * FROM WaterTemperature, CityLocations")
    assert fs.data_sources == {"watertemperature", "citylocations"}


def test_star_only_query_has_no_attributes():
    fs = feats("SELECT * FROM t")
    assert fs.data_sources == {"t"}
    assert fs.attributes == frozenset()
    assert fs.predicates == frozenset()


def test_qualified_predicate_constant():
    fs = feats("SELECT * FROM WaterTemperature WHERE WaterTemperature.temp < 18")
    assert ("temp", "watertemperature", "<", 18) in fs.predicates


def test_unqualified_attr_resolves_via_schema():
    fs = feats("SELECT lake FROM WaterTemperature WHERE temp < 18", SCHEMA)
    assert ("temp", "watertemperature", "<", 18) in fs.predicates
    assert ("lake", "watertemperature", "select") in fs.attributes


def test_unqualified_attr_without_schema_is_unresolved():
    fs = feats("SELECT lake FROM WaterTemperature WHERE temp < 18")
    assert ("temp", UNRESOLVED, "<", 18) in fs.predicates


def test_ambiguous_attr_stays_unresolved():
    # lake exists in both sources, so no unique owner
    fs = feats("SELECT lake FROM WaterTemperature, WaterSalinity", SCHEMA)
    assert ("lake", UNRESOLVED, "select") in fs.attributes


def test_single_source_without_schema_stays_unresolved():
    # resolution needs a schema: FROM arity alone never assigns an owner
    fs = feats("SELECT x FROM mystery")
    assert ("x", UNRESOLVED, "select") in fs.attributes


def test_join_pair_from_equality():
    fs = feats(
        "SELECT * FROM WaterTemperature, WaterSalinity "
        "WHERE WaterTemperature.lake = WaterSalinity.lake"
    )
    assert frozenset(("watertemperature", "watersalinity")) in fs.join_pairs
    assert fs.predicates == frozenset()  # column=column is not a constant predicate


def test_mixed_predicate_and_join():
    fs = feats(
        "SELECT * FROM WaterSalinity, WaterTemperature "
        "WHERE temp < 18 AND WaterSalinity.lake = WaterTemperature.lake",
        SCHEMA,
    )
    assert fs.predicates == {("temp", "watertemperature", "<", 18)}
    assert fs.join_pairs == {frozenset(("watersalinity", "watertemperature"))}


def test_role_tags_cover_all_clauses():
    fs = feats(
        "SELECT lake FROM WaterTemperature WHERE temp > 0 "
        "GROUP BY lake HAVING count(*) > 2 ORDER BY day",
        SCHEMA,
    )
    roles = {(a, role) for a, _r, role in fs.attributes}
    assert ("lake", "select") in roles
    assert ("temp", "where") in roles
    assert ("lake", "groupby") in roles
    assert ("day", "orderby") in roles


def test_having_comparison_gets_having_role():
    fs = feats(
        "SELECT lake FROM WaterTemperature GROUP BY lake HAVING temp > 5", SCHEMA
    )
    assert ("temp", "watertemperature", "having") in fs.attributes
    # HAVING conditions are not WHERE predicates
    assert fs.predicates == frozenset()


def test_aggregates_collected():
    fs = feats("SELECT count(*), avg(temp) FROM WaterTemperature", SCHEMA)
    assert ("count", "*") in fs.aggregates
    assert ("avg", "temp") in fs.aggregates


def test_in_predicate_sorted_tuple_constant():
    fs = feats("SELECT * FROM t WHERE t.x IN (3, 1, 2)")
    assert ("x", "t", "in", (1, 2, 3)) in fs.predicates


def test_between_predicate_tuple_constant():
    fs = feats("SELECT * FROM t WHERE t.x BETWEEN 1 AND 9")
    assert ("x", "t", "between", (1, 9)) in fs.predicates


def test_like_predicate_string_constant():
    fs = feats("SELECT * FROM t WHERE t.name LIKE 'Lake%'")
    assert ("name", "t", "like", "Lake%") in fs.predicates


def test_parameter_marker_constant():
    fs = feats("SELECT * FROM t WHERE t.x = ?")
    assert ("x", "t", "=", PARAM) in fs.predicates


def test_subquery_sets_flag_and_folds_features():
    fs = feats(
        "SELECT * FROM a WHERE a.x > (SELECT max(y) FROM b WHERE b.z = 1)"
    )
    assert fs.has_subquery
    assert fs.data_sources == {"a", "b"}
    assert ("z", "b", "=", 1) in fs.predicates
    assert ("max", "y") in fs.aggregates


def test_exists_subquery_folds():
    fs = feats("SELECT * FROM t WHERE EXISTS (SELECT 1 FROM u WHERE u.id = t.id)")
    assert fs.has_subquery
    assert "u" in fs.data_sources


def test_flipped_literal_comparison_is_same_predicate():
    a = feats("SELECT * FROM t WHERE 18 > t.temp")
    b = feats("SELECT * FROM t WHERE t.temp < 18")
    assert a.predicates == b.predicates


def test_items_tagging():
    fs = feats("SELECT * FROM WaterTemperature WHERE WaterTemperature.temp < 18")
    items = fs.items()
    assert "src:watertemperature" in items
    assert "pred:temp@watertemperature <" in items
    assert "attr:temp@watertemperature" in items


def test_predicate_templates_drop_constants():
    a = feats("SELECT * FROM t WHERE t.x < 18")
    b = feats("SELECT * FROM t WHERE t.x < 99")
    assert a.predicate_templates() == b.predicate_templates()


def test_json_round_trip():
    fs = feats(
        "SELECT lake, count(*) FROM WaterTemperature, WaterSalinity "
        "WHERE temp < 18 AND WaterTemperature.lake = WaterSalinity.lake "
        "AND day IN (1, 2) AND salinity BETWEEN 0 AND ? "
        "GROUP BY lake ORDER BY lake",
        SCHEMA,
    )
    assert FeatureSet.from_json(fs.to_json()) == fs


def test_extraction_deterministic():
    text = "SELECT a, b FROM t, u WHERE t.a = u.a AND t.b > 5 ORDER BY a"
    assert feats(text) == feats(text)


@given(query_text())
@settings(max_examples=150, deadline=None)
def test_predicate_relations_always_in_sources_or_unresolved(text):
    fs = feats(text)
    for _a, r, _op, _c in fs.predicates:
        assert r == UNRESOLVED or r in fs.data_sources
    for _a, r, _role in fs.attributes:
        assert r == UNRESOLVED or r in fs.data_sources


@given(query_text())
@settings(max_examples=100, deadline=None)
def test_json_round_trip_property(text):
    fs = feats(text, SCHEMA)
    assert FeatureSet.from_json(fs.to_json()) == fs
