import json

import numpy as np
import pytest

import loadpct


@pytest.fixture(scope="module")
def data():
    return loadpct.synth(n_consumers=12, noise=0.1, weather_coupling=0.02, seed=3)


@pytest.fixture(scope="module")
def model(data):
    return loadpct.fit(data, min_leaf=100, seed=1)


def test_dataset_shape(data):
    assert len(data) == 12 * 365
    assert data.series_length == 48
    assert data.series().shape == (len(data), 48)
    assert data.attributes().shape == (len(data), len(data.attribute_names))
    assert "pv_flag" in data.attribute_names
    assert data.validate() == ""


def test_energy_score_hand_case():
    scenarios = np.array([[0.0, 0.0], [3.0, 4.0]])
    assert loadpct.energy_score(scenarios, np.zeros(2)) == pytest.approx(1.25, abs=1e-12)
    assert loadpct.energy_score(np.ones((5, 3)), np.ones(3)) == 0.0


def test_fit_and_generate(data, model):
    assert model.leaf_count >= 1
    assert model.depth <= 12
    query = data.attributes()[0]
    scenarios, leaf = loadpct.generate(model, data, query, n_scenarios=40, seed=2)
    assert scenarios.shape == (40, 48)
    assert leaf == model.route(query)
    # Every scenario is a real training day.
    series = data.series()
    for row in scenarios[:5]:
        assert np.any(np.all(series == row, axis=1))
    again, _ = loadpct.generate(model, data, query, n_scenarios=40, seed=2)
    assert np.array_equal(scenarios, again)


def test_model_json_round_trip(tmp_path, data, model):
    text = model.to_json()
    assert json.loads(text)["format"] == "loadpct-model"
    back = loadpct.model_from_json(text)
    assert back.to_json() == text
    path = tmp_path / "m.json"
    model.save(str(path))
    assert loadpct.load_model(str(path)).to_json() == text
    with pytest.raises(loadpct.ParseError):
        loadpct.model_from_json("{")


def test_embedded_model_needs_no_store(data, model):
    embedded = model.embed_series(data)
    assert embedded.has_embedded_series
    scenarios, _ = loadpct.generate(embedded, None, data.attributes()[3], n_scenarios=5)
    assert scenarios.shape == (5, 48)
    with pytest.raises(loadpct.Error):
        loadpct.generate(model, None, data.attributes()[3], n_scenarios=5)


def test_quantiles_and_renderings(data, model):
    q = loadpct.node_quantiles(model, data, 0)
    assert q.shape == (19, 48)
    assert np.all(np.diff(q, axis=0) >= 0)
    assert model.dot().startswith("digraph")
    assert "leaf" in model.outline()


def test_cross_validate(data):
    reports = loadpct.cross_validate(data, methods=["pct", "random"], folds=3, n_scenarios=20, min_leaf=100)
    assert len(reports) == 6
    assert [r["method"] for r in reports[:2]] == ["pct", "random"]
    for r in reports:
        assert len(r["per_instance_es"]) == r["n_test_instances"]
        assert r["mean_es"] > 0


def test_cli_entry_point():
    status, out, _ = loadpct.run_cli(["train", "--help"])
    assert status == 0
    assert "--min-leaf" in out
    status, _, err = loadpct.run_cli(["train", "--train", "/nonexistent.csv", "-o", "/tmp/x.json"])
    assert status != 0
    assert "nonexistent" in err
