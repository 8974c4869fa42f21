import json

import pytest

import psrom


@pytest.fixture(scope="module")
def tree():
    return psrom.synthetic_tree(3)


@pytest.fixture(scope="module")
def surface(tree):
    return psrom.build_surface(tree)


def test_tree_round_trip(tree):
    again = psrom.load_tree(tree.to_json())
    assert len(again) == len(tree)
    assert again.radii() == tree.radii()
    assert all(p[0] == 0 for p in tree.paths())


def test_invalid_tree_raises():
    with pytest.raises(psrom.TreeValidationError):
        psrom.load_tree(json.dumps({"format_version": 1, "name": "x", "points": []}))
    assert issubclass(psrom.TreeValidationError, psrom.Error)


def test_ideal_is_monotone_and_above_patient(tree):
    radii, objective = psrom.fit_ideal(tree)
    doc = json.loads(tree.to_json())
    parent = {p["id"]: p.get("parent") for p in doc["points"]}
    for i, r in enumerate(radii):
        assert r >= tree.radii()[i] - 1e-12
        if parent[i] is not None:
            assert r <= radii[parent[i]] + 1e-12
    assert objective > 0.0


def test_alpha_endpoints():
    assert psrom.alpha(0.1, 0.1, 0.2) == pytest.approx(1.0, abs=1e-12)
    assert psrom.alpha(0.2, 0.1, 0.2) == pytest.approx(0.0, abs=1e-12)


def test_surface_reproduces_oracle(tree, surface):
    oracle = psrom.solve_oracle(tree)
    rom = surface.solve(bc_scaling=False)
    assert rom["converged"]
    assert max(abs(a - b) for a, b in zip(rom["ffr"], oracle["ffr"])) < 0.005


def test_surface_serialization(surface):
    again = psrom.load_surface(surface.to_json())
    assert again.solve()["ffr"] == surface.solve()["ffr"]


def test_lesion_treatment_raises_distal_ffr(tree, surface):
    lesions = psrom.detect_lesions(tree)
    assert lesions
    lesion = lesions[0]
    pre = surface.solve()
    post = surface.solve([(lesion["path_id"], lesion["arc_start"] - 0.2, lesion["arc_end"] + 0.2, 1.0)])
    outlet = tree.paths()[lesion["path_id"]][-1]
    assert post["ffr"][outlet] > pre["ffr"][outlet]


def test_planner_lifecycle(tree):
    planner = psrom.Planner(max_models=2)
    status, created = planner.create_model(tree.to_json())
    assert status == 201
    assert planner.create_model(tree.to_json())[0] == 200
    model = created["model_id"]

    status, listing = planner.lesions(model)
    assert status == 200 and listing["lesions"]
    plan = listing["lesions"][0]["suggested_plan"]
    status, result = planner.evaluate(model, plan["intervals"], plan["blend_length"])
    assert status == 200 and result["converged"]
    assert all(p["ffr_post"] >= p["ffr_pre"] - 1e-9 for p in result["evaluation_points"])

    status, traces = planner.traces(model, 0)
    assert status == 200 and len(traces["traces"]) == 1

    assert planner.delete(model)[0] == 200
    assert planner.lesions(model)[0] == 404


def test_planner_errors():
    planner = psrom.Planner()
    status, body = planner.create_model({"points": 3})
    assert status == 400 and body["error"]["code"] == "invalid_tree"
    assert planner.lesions("missing")[0] == 404
