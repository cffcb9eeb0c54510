import csv
import math

import numpy as np
import pytest
from scipy import stats

from macpp.geometry import ConvexPolygon, unit_square
from macpp.inference import McmcConfig
from macpp.kernel import rect_masses
from macpp.model import ModelGraph, ParamVector, biofilm_graph
from macpp.simulate import (REPORT_COLUMNS, SCENARIOS, dataset_seeds, get_scenario, run_scenario,
                            simulate_pattern, write_report_csv)


def test_parent_count_is_poisson():
    g = ModelGraph(("A",), {"A": "parent"})
    pv = ParamVector(lambda_parent={"A": 150.0})
    n = np.array([len(simulate_pattern(g, pv, unit_square(), s)) for s in range(1000)])
    assert abs(n.mean() - 150) < 3 * math.sqrt(150 / 1000)
    # dispersion index test: sum (n - mean)^2 / mean ~ chi2(999)
    d = np.sum((n - n.mean()) ** 2) / n.mean()
    assert stats.chi2(999).ppf(0.001) < d < stats.chi2(999).ppf(0.999)


def test_offspring_count_matches_thinning_identity(parent_child):
    pv = ParamVector({"B": 4.0}, {"B": 0.01}, {"A": 150.0})
    diffs, expected = [], []
    for s in range(1000):
        pat = simulate_pattern(parent_child, pv, unit_square(), s)
        exp_n = 4.0 * rect_masses(pat.points("A"), 0.01, unit_square()).sum()
        diffs.append(pat.count("B") - exp_n)
        expected.append(exp_n)
    assert np.mean(expected) == pytest.approx(600, rel=0.05)
    assert abs(np.mean(diffs)) < 3 * math.sqrt(600) / math.sqrt(1000)


def test_multilayer_requires_intermediate_layer():
    g = ModelGraph(("A", "B", "C"), {"A": "parent", "B": "offspring", "C": "offspring"}, {"B": "A", "C": "B"})
    pv = ParamVector({"B": 0.02, "C": 3.0}, {"B": 0.05, "C": 0.05}, {"A": 20.0})
    seen_empty = seen_full = False
    for s in range(200):
        pat = simulate_pattern(g, pv, unit_square(), s)
        if pat.count("B") == 0:
            seen_empty = True
            assert pat.count("C") == 0
        elif pat.count("C"):
            seen_full = True
    assert seen_empty and seen_full


def test_biofilm_simulation_on_polygon():
    g = biofilm_graph()
    pv = ParamVector({t: 1.0 for t in g.offspring}, {t: 2.0 for t in g.offspring},
                     {t: 0.01 for t in g.parents}, {t: 0.005 for t in g.unrelated})
    w = ConvexPolygon([(0, 0), (100, 0), (120, 80), (10, 100)])
    pat = simulate_pattern(g, pv, w, 3)
    assert pat.taxa == g.taxa and np.all(w.contains(pat.coords))
    assert simulate_pattern(g, pv, w, 3) == pat


def test_scenario_table():
    assert sorted(SCENARIOS) == list(range(1, 13))
    s1, s2, s9 = get_scenario(1), get_scenario(2), get_scenario(9)
    assert s1.params() == ParamVector({"B": 1.5, "C": 1.0}, {"B": 0.01, "C": 0.02}, {"A": 150.0}, {})
    assert s2.bandwidths == (0.1, 0.01)
    assert s9.unrelated_present and s9.density == "dense" and s9.bandwidth_level == "low"
    assert s9.params().lambda_unrelated == {"D": 95.0}
    assert get_scenario(5).alphas == (4.0, 1.0) and get_scenario(3).alphas == (4.0, 3.0)
    with pytest.raises(KeyError, match="unknown scenario"):
        get_scenario(13)


def test_dataset_seeds_distinct_and_stable():
    seeds = {dataset_seeds(0, sid, i) for sid in range(1, 13) for i in range(50)}
    assert len(seeds) == 600
    assert dataset_seeds(1, 2, 3) == dataset_seeds(1, 2, 3)


def test_run_scenario_two_datasets(tmp_path):
    cfg = McmcConfig(n_iterations=300, n_burnin=100)
    rep = run_scenario(get_scenario(2), 2, cfg, seed=5, with_nsp=True)
    agg = rep.aggregate()
    assert set(agg) == {"alpha[B]", "alpha[C]", "h[B]", "h[C]", "lambda[A]"}
    means = [r.means["alpha[B]"] for r in rep.results]
    assert agg["alpha[B]"]["se"] == pytest.approx(np.std(means, ddof=1))
    assert agg["alpha[B]"]["n_ok"] == 2 and rep.failure_fraction == 0.0
    path = write_report_csv([rep], tmp_path / "r.csv")
    rows = list(csv.DictReader(open(path)))
    assert list(rows[0]) == REPORT_COLUMNS and len(rows) == 5
    with pytest.raises(ValueError):
        run_scenario(get_scenario(1), 1, cfg)
    again = run_scenario(get_scenario(2), 2, cfg, seed=5, with_nsp=True)
    assert again.aggregate() == agg
