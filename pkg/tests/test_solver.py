"""Serial predictor-corrector: exactness, variants, adaptivity, determinism."""

import numpy as np
import pytest

from hbpc.core import SplitProblem
from hbpc.newton import NewtonConfig
from hbpc.problems import pareschi_russo, scalar_pow
from hbpc.solver import (CapExceededError, IterateGrid, NoConvergenceError,
                         RunResult, SolverConfig, StageSource, adaptive_kmax,
                         integrate, limit_integrate, seed)
from hbpc.tableaux import builtin


def _constant_flux_problem(c=2.0, dim=1, t_end=1.0):
    cvec = np.full(dim, c)
    zero = np.zeros((dim, dim))
    return SplitProblem(
        dim=dim,
        phi_e=lambda w: cvec.copy(),
        phi_i=lambda w: np.zeros(dim),
        w0=np.zeros(dim), t_end=t_end,
        jac_e=lambda w: zero, jac_i=lambda w: zero,
        dphi_i_jac=lambda w: zero,
        exact=lambda t: cvec * t)


def _pure_implicit_decay(t_end=0.5):
    return SplitProblem(
        dim=1,
        phi_e=lambda w: np.zeros(1),
        phi_i=lambda w: -w,
        w0=np.ones(1), t_end=t_end,
        jac_e=lambda w: np.zeros((1, 1)),
        jac_i=lambda w: -np.eye(1),
        dphi_i_jac=lambda w: np.eye(1),
        exact=lambda t: np.exp(-t) * np.ones(1))


@pytest.mark.parametrize("variant", ["Alg1", "Alg2", "LO"])
def test_constant_flux_is_exact_in_every_iterate(variant):
    p = _constant_flux_problem()
    run = integrate(p, SolverConfig(variant=variant, q=4, kmax=3, n_steps=5))
    assert run.errors is not None
    assert np.all(run.errors < 1e-13)
    assert run.updates[0] == pytest.approx([0.0])
    assert run.updates[-1] == pytest.approx([2.0], rel=1e-14)


def test_predictor_stage_closed_form():
    # Pure implicit phi(w) = -w: predictor stage l solves
    # w (1 + a + a^2/2) = w_src with a = c_l dt.
    from hbpc.solver import predictor_block
    from hbpc.core import eval_bundle

    p = _pure_implicit_decay()
    tab = builtin(4)
    dt = 0.125
    src = StageSource(p.w0.copy(), eval_bundle(p, p.w0))
    ncfg = NewtonConfig(rel_tol=1e-14, abs_tol=1e-15)
    ws, fs, results = predictor_block(p, tab, dt, src, ncfg)
    for l, c in enumerate(tab.c):
        a = c * dt
        assert ws[l][0] == pytest.approx(1.0 / (1.0 + a + 0.5 * a * a),
                                         rel=1e-12)
    assert results[0].iters == 0  # stage 0 is a copy


@pytest.mark.parametrize("kw", [
    {"variant": "Alg3"},
    {"kmax": 0},
    {"n_steps": 0},
    {"limit_tol": 0.0},
    {"limit_max_sweeps": 0},
    {"corrector_start": "blue"},
])
def test_solver_config_validation(kw):
    with pytest.raises(ValueError):
        SolverConfig(**kw)


def test_grid_source_selection():
    kmax = 3
    prev = [StageSource(np.array([float(k)]), None) for k in range(kmax + 1)]
    grid = IterateGrid(s=3, kmax=kmax, prev_last=prev)
    assert grid.predictor_source("Alg1").w[0] == 0.0
    assert grid.predictor_source("Alg2").w[0] == 1.0
    assert grid.predictor_source("LO").w[0] == 0.0
    # hierarchical red: one lane above the target, clamped at kmax
    assert grid.red_source(1, "Alg1").w[0] == 2.0
    assert grid.red_source(2, "Alg1").w[0] == 3.0
    assert grid.red_source(3, "Alg1").w[0] == 3.0
    assert grid.red_source(1, "Alg2").w[0] == 2.0
    # LO reads its own lane
    for k in range(kmax + 1):
        assert grid.red_source(k, "LO").w[0] == float(k)


def test_errors_none_without_reference():
    p = SplitProblem(dim=1, phi_e=lambda w: -w, phi_i=lambda w: np.zeros(1),
                     w0=np.ones(1), t_end=0.3)
    run = integrate(p, SolverConfig(n_steps=3))
    assert run.errors is None
    assert run.final_last_w[-1].shape == (1,)


def test_zero_flux_keeps_state_fixed():
    p = SplitProblem(dim=2, phi_e=lambda w: np.zeros(2),
                     phi_i=lambda w: np.zeros(2),
                     w0=np.array([1.0, -2.0]), t_end=1.0,
                     exact=lambda t: np.array([1.0, -2.0]))
    run = integrate(p, SolverConfig(q=6, kmax=2, n_steps=4))
    assert np.all(run.errors == 0.0)
    assert np.all(run.updates == run.updates[0])


def test_integrate_is_deterministic():
    p = scalar_pow()
    cfg = SolverConfig(q=4, kmax=3, n_steps=12)
    a = integrate(p, cfg)
    b = integrate(p, cfg)
    assert np.array_equal(a.updates, b.updates)
    assert np.array_equal(a.errors, b.errors)
    assert np.array_equal(a.newton_per_iterate, b.newton_per_iterate)


def test_update_trajectory_shape_and_seed():
    p = scalar_pow()
    run = integrate(p, SolverConfig(n_steps=7))
    assert run.updates.shape == (8, 1)
    assert run.updates[0] == pytest.approx(p.w0)


def test_fourth_order_error_decay():
    p = scalar_pow()
    e = [integrate(p, SolverConfig(q=4, kmax=3, n_steps=n)).errors[-1]
         for n in (10, 20)]
    ratio = e[0] / e[1]
    assert 10.0 < ratio < 26.0  # 2^4 = 16 up to pre-asymptotic wiggle


def test_third_order_predictor_beats_second_order():
    p = scalar_pow()
    slopes = {}
    for variant in ("Alg1", "Alg2"):
        e = [integrate(p, SolverConfig(variant=variant, q=4, kmax=1,
                                       n_steps=n)).errors[0]
             for n in (20, 40)]
        slopes[variant] = np.log2(e[0] / e[1])
    assert slopes["Alg1"] < 2.5
    assert slopes["Alg2"] > 2.5


def test_lo_variant_runs_all_lanes():
    p = scalar_pow()
    run = integrate(p, SolverConfig(variant="LO", q=4, kmax=4, n_steps=16))
    assert run.errors.shape == (5,)
    assert np.all(np.isfinite(run.errors))
    assert run.errors[-1] < run.errors[0]


def test_corrector_start_red_matches_hierarchical_closely():
    p = scalar_pow()
    tight = NewtonConfig(rel_tol=1e-12, abs_tol=1e-15)
    a = integrate(p, SolverConfig(q=4, kmax=3, n_steps=10, newton=tight))
    b = integrate(p, SolverConfig(q=4, kmax=3, n_steps=10, newton=tight,
                                  corrector_start="red"))
    # same fixed points, different Newton starts: solutions agree to tolerance
    assert a.updates[-1] == pytest.approx(b.updates[-1], rel=1e-9)


def test_limit_dispatch_and_sweep_bookkeeping():
    p = scalar_pow()
    run = integrate(p, SolverConfig(variant="Limit", q=4, n_steps=5))
    assert isinstance(run, RunResult)
    assert run.errors.shape == (1,)
    assert run.sweeps_per_step is not None and len(run.sweeps_per_step) == 5
    assert all(s >= 1 for s in run.sweeps_per_step)
    assert run.newton_per_iterate.shape == (1,)


def test_limit_requires_limit_variant():
    p = scalar_pow()
    with pytest.raises(ValueError):
        limit_integrate(p, SolverConfig(variant="Alg1", n_steps=2))


def test_limit_sweep_cap_raises():
    p = scalar_pow()
    cfg = SolverConfig(variant="Limit", q=4, n_steps=2, limit_max_sweeps=1)
    with pytest.raises(NoConvergenceError):
        limit_integrate(p, cfg)


def test_limit_beats_fixed_small_kmax():
    p = scalar_pow()
    e_fixed = integrate(p, SolverConfig(q=6, kmax=1, n_steps=8)).errors[-1]
    e_limit = integrate(p, SolverConfig(variant="Limit", q=6, n_steps=8)).errors[0]
    assert e_limit < e_fixed


def test_adaptive_kmax_reaches_the_limit_error():
    p = scalar_pow()
    base = SolverConfig(q=4, n_steps=8)
    kmax_used, run = adaptive_kmax(p, base, start_kmax=1)
    assert kmax_used >= 2  # at least one doubling happened
    e_limit = integrate(p, SolverConfig(variant="Limit", q=4, n_steps=8)).errors[0]
    assert run.errors[-1] == pytest.approx(e_limit, rel=0.02)


def test_adaptive_kmax_cap_and_validation():
    p = scalar_pow()
    with pytest.raises(CapExceededError):
        adaptive_kmax(p, SolverConfig(q=4, n_steps=4), start_kmax=2, cap=3)
    with pytest.raises(ValueError):
        adaptive_kmax(p, SolverConfig(q=4, n_steps=4), start_kmax=0)
    bare = SplitProblem(dim=1, phi_e=lambda w: -w,
                        phi_i=lambda w: np.zeros(1), w0=np.ones(1), t_end=0.2)
    with pytest.raises(ValueError):
        adaptive_kmax(bare, SolverConfig(q=4, n_steps=4), start_kmax=1)


def test_keep_traces_records_every_step():
    p = pareschi_russo(eps=1.0)
    run = integrate(p, SolverConfig(q=4, kmax=2, n_steps=3), keep_traces=True)
    assert len(run.traces) == 3
    tr = run.traces[0]
    assert tr.newton_iters.shape == (3,)
    assert len(tr.last_stage_w) == 3
    assert run.newton_per_iterate == pytest.approx(
        sum(t.newton_iters for t in run.traces))
