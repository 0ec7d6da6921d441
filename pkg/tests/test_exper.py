import math

import numpy as np
import pytest

from qxfer.exper import (
    DecayTimeNotReached,
    coupling_sweep,
    decay_probability_exact,
    default_time_grid,
    find_decay_time,
    linear_fit,
    paper_couplings,
    pathway_additivity_check,
    run_decay_series,
    run_full_series,
    run_mi_series,
)
from qxfer.model import paper_figure_model

LOG2 = math.log(2)


def test_linear_fit_exact_line():
    fit = linear_fit([0, 1, 2, 3], [1, 3, 5, 7])
    assert fit.slope == pytest.approx(2)
    assert fit.intercept == pytest.approx(1)
    assert fit.r_squared == pytest.approx(1)


def test_linear_fit_two_points():
    assert linear_fit([1.0, 4.0], [2.0, -1.0]).r_squared == pytest.approx(1.0)


def test_linear_fit_matches_normal_equations():
    rng = np.random.default_rng(4)
    x = rng.uniform(0, 10, 50)
    y = 0.7 * x - 3 + rng.normal(0, 0.5, 50)
    fit = linear_fit(x, y)
    design = np.column_stack([x, np.ones_like(x)])
    slope, intercept = np.linalg.solve(design.T @ design, design.T @ y)
    assert fit.slope == pytest.approx(slope, abs=1e-12)
    assert fit.intercept == pytest.approx(intercept, abs=1e-12)
    resid = y - design @ [slope, intercept]
    r2 = 1 - resid @ resid / np.sum((y - y.mean()) ** 2)
    assert fit.r_squared == pytest.approx(r2, abs=1e-12)


def test_linear_fit_reparametrized_x():
    rng = np.random.default_rng(8)
    x = rng.uniform(1, 2, 10)
    y = 3 * x + rng.normal(0, 0.1, 10)
    a, b = linear_fit(x, y), linear_fit(x * 9.0, y)
    assert b.slope * 9.0 == pytest.approx(a.slope, rel=1e-12)
    assert b.intercept == pytest.approx(a.intercept, rel=1e-10)
    assert b.r_squared == pytest.approx(a.r_squared, rel=1e-12)


def test_linear_fit_degenerate():
    with pytest.raises(ValueError):
        linear_fit([1, 1, 1], [1, 2, 3])
    with pytest.raises(ValueError):
        linear_fit([1], [1])


def test_decay_series_zero_coupling():
    m = paper_figure_model(0.0, 1, 2)
    s = run_decay_series(m, np.linspace(0, 2e4, 50))
    assert np.max(np.abs(s["P_numeric"])) < 1e-12
    assert np.all(s["P_perturbative"] == 0)


def test_decay_series_basic(paper_model):
    grid = default_time_grid(paper_model)
    s = run_decay_series(paper_model, grid)
    assert abs(s["P_numeric"][0]) < 1e-12
    assert np.all(s["P_numeric"] >= -1e-9) and np.all(s["P_numeric"] <= 1 + 1e-9)
    assert s.metadata["grid"]["samples"] == grid.size


def test_mi_series_start(paper_model):
    s = run_mi_series(paper_model, [0.0, 10.0])
    assert abs(s["I_numeric"][0]) < 1e-12
    assert abs(s["I_model"][0]) < 1e-12


def test_mi_series_reaches_plateau(paper_model):
    s = run_mi_series(paper_model, default_time_grid(paper_model))
    assert s["I_numeric"].max() >= 2 * LOG2 - 0.1


def test_pure_state_identities_along_run(paper_model):
    s = run_mi_series(paper_model, np.linspace(0, 2e4, 80))
    np.testing.assert_allclose(s["I_numeric"] + s["I_A_Abar"], 2 * LOG2, atol=1e-8)
    assert np.max(np.abs(s["S_Abar"] - LOG2)) <= 1e-10


def test_dual_decay_definitions(paper_model):
    grid = np.linspace(0, 2e4, 80)
    s = run_mi_series(paper_model, grid)
    p1 = decay_probability_exact(paper_model, grid, 1)
    # excitation of A picked up by the |0>|psi0> branch
    p01 = decay_probability_exact(paper_model, grid, 0)
    assert np.max(np.abs(s["excited_population"] - ((1 - p1) / 2 + p01 / 2))) <= 1e-10
    # without that O(c^2) off-resonant term the relation is approximate
    assert np.max(np.abs(s["excited_population"] - (1 - p1) / 2)) < 1e-4


def test_full_series_columns(paper_model):
    s = run_full_series(paper_model, np.linspace(0, 1000, 5))
    for name in ("P_numeric", "P_perturbative", "I_numeric", "I_model", "S_A", "S_B"):
        assert s[name].shape == (5,)


def test_find_decay_time_paper(paper_model):
    t = find_decay_time(paper_model, 0.8)
    assert math.isfinite(t) and t > 0
    assert decay_probability_exact(paper_model, t) == pytest.approx(0.8, abs=1e-3)
    # first crossing: never above target earlier
    early = decay_probability_exact(paper_model, np.linspace(0, t * 0.999, 500))
    assert early.max() < 0.8


def test_find_decay_time_never_reached():
    m = paper_figure_model(0.0, 1, 2)
    with pytest.raises(DecayTimeNotReached, match="max P"):
        find_decay_time(m, 0.8, np.linspace(0, 1e4, 100))
    with pytest.raises(ValueError):
        find_decay_time(m, 1.2, np.linspace(0, 1, 3))


@pytest.mark.xfail(
    strict=True,
    reason="at c=1/400 the coupling per environment level is below the level spacing and one "
    "level is exactly resonant, so T_0.8 scales like 1/c (ratio ~2), not 1/c^2",
)
def test_halving_c_quadruples_decay_time(paper_seeds):
    t1 = find_decay_time(paper_figure_model(1 / 400, *paper_seeds), 0.8, extend=4)
    t2 = find_decay_time(paper_figure_model(1 / 800, *paper_seeds), 0.8, extend=4)
    assert t2 / t1 == pytest.approx(4.0, rel=0.25)


def test_halving_c_quadruples_decay_time_golden_rule_regime(paper_seeds):
    t1 = find_decay_time(paper_figure_model(0.03, *paper_seeds), 0.8, extend=4)
    t2 = find_decay_time(paper_figure_model(0.015, *paper_seeds), 0.8, extend=4)
    assert t2 / t1 == pytest.approx(4.0, rel=0.25)


def test_paper_couplings():
    cs = paper_couplings()
    assert len(cs) == 10
    assert cs[0] == pytest.approx(1 / 500 + 1 / 6000)
    assert cs[-1] == pytest.approx(1 / 500 + 10 / 6000)


def test_sweep_rows_sorted_and_monotone(paper_seeds):
    res = coupling_sweep(paper_couplings()[::-1], *paper_seeds)
    cs = [r.c for r in res.rows]
    assert cs == sorted(cs)
    ts = [r.t_target for r in res.rows]
    assert all(r.valid for r in res.rows)
    assert all(a > b for a, b in zip(ts, ts[1:]))
    assert res.fit is not None and 0 <= res.fit.r_squared <= 1


def test_sweep_parallel_matches_serial(paper_seeds):
    cs = paper_couplings()[:4]
    a = coupling_sweep(cs, *paper_seeds)
    b = coupling_sweep(cs, *paper_seeds, workers=4)
    assert a.rows == b.rows


def test_sweep_marks_unreached_rows_invalid(paper_seeds):
    def factory(c):
        return paper_figure_model(0.0 if c < 1e-3 else c, *paper_seeds)

    res = coupling_sweep([1e-4, 0.003], *paper_seeds, factory=factory, extend=0)
    assert [r.valid for r in res.rows] == [False, True]
    assert res.rows[0].error
    assert math.isnan(res.rows[0].t_target)
    assert res.fit is None


def test_sweep_rejects_nonpositive():
    with pytest.raises(ValueError):
        coupling_sweep([0.0, 0.1], 1, 2)


@pytest.mark.parametrize("seed_pair", [(7, 0.147), (1, 0.039), (2, 0.196)])
def test_conjecture_scaling_golden_rule_regime(seed_pair):
    # where c^2/128 per level exceeds the 1/600 spacing, T ~ 1/c^2 and K is nearly c-independent
    from qxfer.model import derive_seeds

    seed, frozen = seed_pair
    res = coupling_sweep(np.linspace(0.02, 0.03, 6), *derive_seeds(seed))
    assert res.k_spread() == pytest.approx(frozen, abs=5e-3)
    assert res.k_spread() <= 0.30


def test_additivity_degenerate_pathway(paper_seeds):
    rep = pathway_additivity_check(1 / 400, 0.0, *paper_seeds)
    assert rep.ratio == pytest.approx(1.0, abs=1e-6)
    assert rep.t_single[1] == math.inf


def test_additivity_order_symmetric(paper_seeds):
    a = pathway_additivity_check(1 / 400, 1 / 300, *paper_seeds,
                                 env_ops=("sigmaX-on-env-qubit-1", "sigmaX-on-env-qubit-2"))
    b = pathway_additivity_check(1 / 300, 1 / 400, *paper_seeds,
                                 env_ops=("sigmaX-on-env-qubit-2", "sigmaX-on-env-qubit-1"))
    assert a.t_combined == b.t_combined
    assert a.t_single == b.t_single[::-1]
    assert a.ratio == b.ratio


def test_additivity_equal_couplings(paper_seeds):
    rep = pathway_additivity_check(1 / 400, 1 / 400, *paper_seeds)
    assert rep.ratio == pytest.approx(1.0, rel=0.30)
