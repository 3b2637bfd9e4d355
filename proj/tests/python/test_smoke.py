import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

import progclust as pc


def test_sigmoid_round_trip():
    days = np.linspace(0, 900, 10)
    scores = np.array([pc.eval_sigmoid(44.0, 0.015, 400.0, 1.0, d) for d in days])
    fit = pc.fit_sigmoid(days, scores, seed=3)
    assert fit["rmse"] < 1e-3
    d50 = pc.invert_for_score(fit["b"], fit["m"], fit["a"], fit["c"], 24.0)
    assert pc.eval_sigmoid(fit["b"], fit["m"], fit["a"], fit["c"], d50) == pytest.approx(24.0, abs=1e-6)


def test_distances_and_audit():
    pts = np.array([[0.0, 0.0], [3.0, 4.0], [1.0, 1.0]])
    man = pc.distance_matrix(pts, "MAN")
    euc = pc.distance_matrix(pts, "EUC")
    assert man[0, 1] == pytest.approx(7.0)
    assert euc[0, 1] == pytest.approx(5.0)
    assert np.allclose(euc, euc.T)
    audit = json.loads(pc.audit_metric(euc))
    assert audit["violations"] == 0
    with pytest.raises(ValueError):
        pc.distance_matrix(pts, "XYZ")


def test_clustering_on_blobs():
    rng = np.random.default_rng(0)
    pts = np.vstack([rng.normal(0, 0.3, (20, 2)), rng.normal(8, 0.3, (20, 2))])
    truth = np.repeat([0, 1], 20)
    d = pc.distance_matrix(pts, "EUC")
    for labels in (pc.kmeans(pts, 2, seed=1), pc.kmedoids(d, 2)[0], pc.ahc_complete(d, 2)):
        assert pc.adjusted_rand_index(labels, truth) == pytest.approx(1.0)
    mean, std, values = pc.silhouette(d, truth)
    assert mean > 0.9 and len(values) == 40 and std >= 0.0
    coords = pc.embed(d, n_neighbors=10, n_epochs=200, seed=2)
    assert coords.shape == (40, 2) and np.isfinite(coords).all()
    again = pc.embed(d, n_neighbors=10, n_epochs=200, seed=2)
    assert np.array_equal(coords, again)


def test_logrank_identical_groups():
    t = np.array([1.0, 2.0, 3.0, 4.0])
    e = np.array([1, 1, 0, 1])
    stat, p = pc.logrank(t, e, t, e)
    assert stat == pytest.approx(0.0, abs=1e-12)
    assert p == pytest.approx(1.0)


def test_config_round_trip():
    cfg = pc.Config("k_max = 4\nthreads = 2\n")
    assert cfg.threads == 2
    again = pc.Config(cfg.text)
    assert again.text == cfg.text
    assert len(pc.workflow_names(cfg)) == 4 * (2 + 3) * 3 + 3 + 2 * 3
    with pytest.raises(ValueError):
        pc.Config("no_such_key = 1\n")


def test_grid_and_reports(tmp_path):
    cohort = pc.synth_cohort(patients=90, seed=5, out_dir=str(tmp_path / "data"))
    assert len(cohort) == len(cohort.planted) > 0
    loaded = pc.load_cohort(str(tmp_path / "data" / "visits.csv"), str(tmp_path / "data" / "outcomes.csv"))
    assert loaded.ids == cohort.ids

    cfg = pc.Config("k_max = 3\n")
    out = tmp_path / "out"
    run = pc.run_grid(cohort, cfg, out_dir=str(out))
    rows = run["results"]
    assert len(rows) == len(pc.workflow_names(cfg))
    ok = [r for r in rows if r["ok"]]
    assert ok and all(r["ari"] is not None for r in ok)
    assert max(r["ari"] for r in ok) > 0.9
    assert set(run["ranked"]) <= {r["workflow"] for r in ok}
    for r in ok:
        assert -1.0 <= r["silhouette_mean"] <= 1.0
        assert 0.0 <= r["logrank_p_max"] <= 1.0 and not math.isnan(r["lrs_min"])

    assert (out / "results.csv").is_file()
    svgs = list(out.rglob("*.svg"))
    assert svgs
    for svg in svgs:
        assert ET.parse(svg).getroot().tag.endswith("svg")

    single = pc.run_grid(cohort, cfg, workflows=[ok[0]["workflow"]])
    assert np.array_equal(single["results"][0]["labels"], ok[0]["labels"])
