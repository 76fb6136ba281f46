import json
import random

import pytest

from util import fixture_bytes

from crashscope.analysis import (
    ApiCall,
    AppIR,
    IrMethod,
    extract_feature_map,
    features_for_screen,
    load_app_ir,
)
from crashscope.domain import ContextualFeature, ValidationError

FEATURES = [f for f in ContextualFeature if f != ContextualFeature.ROTATION]


def ir_of(methods, edges, entries, manifest=None):
    return AppIR(
        package="com.x",
        methods=tuple(methods),
        call_edges=tuple(edges),
        activity_entries={a: tuple(ms) for a, ms in entries.items()},
        manifest_activities=tuple(manifest or [(a, False) for a in entries]),
    )


def method(mid, *features):
    return IrMethod(mid, "C", tuple(ApiCall(f, f"api.{f.value}") for f in features))


# -- spec examples


def test_chain_reaches_activity_level():
    ir = ir_of(
        [method("h"), method("m1"), method("m2", ContextualFeature.NETWORK)],
        [("h", "m1"), ("m1", "m2")],
        {"A": ["h"]},
    )
    out = extract_feature_map(ir)
    assert out.activity_level["A"] == {ContextualFeature.NETWORK}
    assert out.app_level == set()


def test_unreachable_service_goes_app_level():
    ir = ir_of(
        [method("h"), method("s", ContextualFeature.GPS)],
        [],
        {"A": ["h"]},
    )
    out = extract_feature_map(ir)
    assert out.activity_level["A"] == set()
    assert out.app_level == {ContextualFeature.GPS}


def test_no_api_calls_yields_empty_map_with_rotatable():
    ir = ir_of([method("h")], [], {"A": ["h"]}, manifest=[("A", True), ("B", False)])
    out = extract_feature_map(ir)
    assert not out.app_level
    assert all(not v for v in out.activity_level.values())
    assert out.rotatable == {"A"}


def test_features_for_screen_union_and_unknown():
    ir = ir_of(
        [method("h", ContextualFeature.NETWORK), method("s", ContextualFeature.GPS)],
        [],
        {"A": ["h"]},
    )
    out = extract_feature_map(ir)
    assert features_for_screen(out, "A") == {ContextualFeature.NETWORK, ContextualFeature.GPS}
    assert features_for_screen(out, "Z") == {ContextualFeature.GPS}


def test_cycles_are_handled():
    ir = ir_of(
        [method("h"), method("a"), method("b", ContextualFeature.TEMPERATURE)],
        [("h", "a"), ("a", "b"), ("b", "a")],
        {"A": ["h"]},
    )
    assert extract_feature_map(ir).activity_level["A"] == {ContextualFeature.TEMPERATURE}


def test_site_linked_to_one_activity_and_unlinked_elsewhere():
    # The same feature lands both at activity level (reachable site) and at
    # app level (orphaned site): call sites are classified independently.
    ir = ir_of(
        [
            method("h"),
            method("m", ContextualFeature.NETWORK),
            method("svc", ContextualFeature.NETWORK),
        ],
        [("h", "m")],
        {"A": ["h"]},
    )
    out = extract_feature_map(ir)
    assert out.activity_level["A"] == {ContextualFeature.NETWORK}
    assert out.app_level == {ContextualFeature.NETWORK}


# -- loading


def test_load_fixture_ir():
    ir = load_app_ir(fixture_bytes("network_outage", "ir.json"))
    out = extract_feature_map(ir)
    assert out.activity_level["StatusActivity"] == {ContextualFeature.NETWORK}


def test_load_rejects_unknown_caller():
    bad = {
        "package": "p",
        "methods": [{"id": "a"}],
        "call_edges": [["a", "ghost"]],
        "activity_entries": {},
        "manifest": {"activities": []},
    }
    with pytest.raises(ValidationError) as err:
        load_app_ir(json.dumps(bad))
    assert "call_edges[0]" in str(err.value)


def test_load_rejects_rotation_api_sites():
    bad = {
        "package": "p",
        "methods": [{"id": "a", "api_calls": [{"feature": "ROTATION"}]}],
        "call_edges": [],
        "activity_entries": {},
        "manifest": {"activities": []},
    }
    with pytest.raises(ValidationError):
        load_app_ir(json.dumps(bad))


# -- brute-force oracle equivalence


def brute_force(ir: AppIR):
    """Forward BFS from every entry over the original edge direction."""
    forward = {}
    for caller, callee in ir.call_edges:
        forward.setdefault(caller, []).append(callee)

    reachable_from = {}
    for activity, entries in ir.activity_entries.items():
        seen = set()
        frontier = list(entries)
        while frontier:
            node = frontier.pop()
            if node in seen:
                continue
            seen.add(node)
            frontier.extend(forward.get(node, []))
        reachable_from[activity] = seen

    activity_level = {name: set() for name, _ in ir.manifest_activities}
    app_level = set()
    for m in ir.methods:
        for call in m.api_calls:
            owners = [a for a, seen in reachable_from.items() if m.id in seen]
            if owners:
                for a in owners:
                    activity_level[a].add(call.feature)
            else:
                app_level.add(call.feature)
    return activity_level, app_level


def random_ir(rng: random.Random) -> AppIR:
    n = rng.randint(1, 50)
    ids = [f"m{i}" for i in range(n)]
    methods = []
    for mid in ids:
        calls = tuple(
            ApiCall(rng.choice(FEATURES), "api") for _ in range(rng.choice([0, 0, 0, 1, 1, 2]))
        )
        methods.append(IrMethod(mid, "C", calls))
    edges = []
    for _ in range(rng.randint(0, 2 * n)):
        edges.append((rng.choice(ids), rng.choice(ids)))
    activities = [f"A{i}" for i in range(rng.randint(0, 4))]
    entries = {a: [rng.choice(ids) for _ in range(rng.randint(1, 2))] for a in activities}
    return ir_of(methods, edges, entries)


def test_matches_brute_force_on_200_random_irs():
    rng = random.Random(1337)
    for _ in range(200):
        ir = random_ir(rng)
        out = extract_feature_map(ir)
        expected_activity, expected_app = brute_force(ir)
        assert out.activity_level == expected_activity
        assert out.app_level == expected_app


def test_adding_an_edge_never_removes_features():
    rng = random.Random(99)
    for _ in range(50):
        ir = random_ir(rng)
        before = extract_feature_map(ir)
        ids = [m.id for m in ir.methods]
        extra = (rng.choice(ids), rng.choice(ids))
        grown = AppIR(
            package=ir.package,
            methods=ir.methods,
            call_edges=ir.call_edges + (extra,),
            activity_entries=ir.activity_entries,
            manifest_activities=ir.manifest_activities,
        )
        after = extract_feature_map(grown)
        for activity, features in before.activity_level.items():
            assert features <= after.activity_level[activity]


def test_no_feature_lost():
    rng = random.Random(7)
    for _ in range(50):
        ir = random_ir(rng)
        present = {c.feature for m in ir.methods for c in m.api_calls}
        out = extract_feature_map(ir)
        surfaced = set(out.app_level)
        for features in out.activity_level.values():
            surfaced |= features
        assert present == surfaced
