"""Serial predictor-corrector solvers built on two-derivative collocation.

One timestep runs a second-order implicit Taylor predictor over the stages
(iterate 0) followed by kmax correction sweeps. Each correction solves, per
stage, a small implicit system whose forcing combines the previous iterate's
cached fluxes with the stage quadrature; the update is the last stage of the
last iterate (first-same-as-last). Four variants share this machinery:

- ``Alg1``: baseline sweep; the additive constant of iterate k+1 at step n is
  the last stage of iterate min(k+2, kmax) from step n-1.
- ``Alg2``: third-order predictor (sources iterate 1 of the previous step) and
  Gauss-Seidel quadrature (stages already updated this sweep contribute their
  fresh fluxes).
- ``LO``: each target iterate sources its own lane from the previous step,
  which decouples iterates across steps at the cost of second-order accuracy.
- ``Limit``: per step, Gauss-Seidel sweeps repeat until the stage values stop
  changing, realizing the limiting fully coupled Runge-Kutta method.

Stage solves delegate to the damped Newton iteration; flux bundles are cached
per stage and reused everywhere so a pipelined execution of the same blocks
performs bit-identical floating-point work.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .core import Array, FluxBundle, SplitProblem, eval_bundle, fd_jacobian
from .newton import NewtonConfig, NewtonResult
from . import newton as _newton
from .tableaux import TwoDerivativeTableau, builtin, quadrature

VARIANTS = ("Alg1", "Alg2", "LO", "Limit")
CORRECTOR_STARTS = ("hierarchical", "red")


class NoConvergenceError(RuntimeError):
    """Limit sweep cap reached while stage values were still changing."""


class CapExceededError(RuntimeError):
    """Adaptive doubling passed the iterate ceiling without stabilizing."""


@dataclass(frozen=True)
class SolverConfig:
    variant: str = "Alg1"
    q: int = 4
    kmax: int = 3
    n_steps: int = 1
    newton: NewtonConfig = NewtonConfig()
    limit_tol: float = 1e-13
    limit_max_sweeps: int = 10000
    corrector_start: str = "hierarchical"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r} (use one of {VARIANTS})")
        if self.kmax < 1:
            raise ValueError("kmax must be at least 1")
        if self.n_steps < 1:
            raise ValueError("n_steps must be at least 1")
        if self.limit_tol <= 0 or self.limit_max_sweeps < 1:
            raise ValueError("limit_tol must be positive, limit_max_sweeps at least 1")
        if self.corrector_start not in CORRECTOR_STARTS:
            raise ValueError(f"corrector_start must be one of {CORRECTOR_STARTS}")


@dataclass(frozen=True)
class StageSource:
    """A state and its flux bundle, feeding a predictor or a red term."""

    w: Array
    f: FluxBundle


@dataclass
class IterateGrid:
    """Stage states and cached flux bundles for one step plus the snapshots
    of the previous step's last stages that the next step will read."""

    s: int
    kmax: int
    prev_last: list  # [k] -> StageSource, previous step's last stage of iterate k
    w: list = field(default_factory=list)  # [k][l] current-step stage states
    f: list = field(default_factory=list)  # [k][l] current-step flux bundles

    def __post_init__(self):
        if not self.w:
            self.clear_current()

    def clear_current(self):
        self.w = [[None] * self.s for _ in range(self.kmax + 1)]
        self.f = [[None] * self.s for _ in range(self.kmax + 1)]

    def predictor_source(self, variant: str) -> StageSource:
        return self.prev_last[1] if variant == "Alg2" else self.prev_last[0]

    def red_source(self, k_target: int, variant: str) -> StageSource:
        if variant == "LO":
            return self.prev_last[k_target]
        return self.prev_last[min(k_target + 1, self.kmax)]

    def rotate(self):
        self.prev_last = [StageSource(self.w[k][-1], self.f[k][-1])
                          for k in range(self.kmax + 1)]
        self.clear_current()


@dataclass
class StepTrace:
    newton_iters: Array       # (kmax+1,) Newton iterations per iterate this step
    residual_norms: list      # [k][l] final residual norm per stage solve
    last_stage_w: list        # [k] last-stage state per iterate this step
    iter_cap_hits: int = 0
    sweeps: int = 0           # Limit only


@dataclass
class RunResult:
    config: SolverConfig
    t_end: float
    updates: Array                 # (n_steps+1, dim) accepted updates w^0..w^N
    final_last_w: list             # [k] last-stage state per iterate at the final step
    errors: Array | None           # per-iterate 2-norm error at t_end, None without reference
    newton_per_iterate: Array      # (kmax+1,) total Newton iterations per iterate
    iter_cap_hits: int
    wallclock: float
    traces: list | None = None
    sweeps_per_step: list | None = None


def _copy_result(w: Array) -> NewtonResult:
    return NewtonResult(w=w, iters=0, residual_norm=0.0, converged_by="absolute")


def _solve_stage(p: SplitProblem, a: float, rhs: Array, w_start: Array,
                 ncfg: NewtonConfig):
    """Solve w - a Phi_I(w) + a^2/2 dPhi_I(w) = rhs; return (w, bundle, result).

    The residual Jacobian is assembled analytically when the problem carries
    d(dPhi_I)/dw, otherwise by finite differences of the residual map.
    """
    half_a2 = 0.5 * a * a

    def F(w):
        with np.errstate(all="ignore"):
            ftot = p.phi_e(w) + p.phi_i(w)
            fi = p.phi_i(w)
            di = p.jac_i(w) @ ftot
        return w - a * fi + half_a2 * di - rhs

    if p.dphi_i_jac is not None:
        eye = np.eye(p.dim)

        def J(w):
            with np.errstate(all="ignore"):
                return eye - a * p.jac_i(w) + half_a2 * p.dphi_i_jac(w)
    else:
        def J(w):
            return fd_jacobian(F, w)

    res = _newton.solve(F, J, w_start, ncfg)
    return res.w, eval_bundle(p, res.w), res


def seed(p: SplitProblem, cfg: SolverConfig) -> IterateGrid:
    """Fresh grid whose previous-step slots all hold the initial state."""
    tab = builtin(cfg.q)
    f0 = eval_bundle(p, p.w0)
    prev = [StageSource(p.w0.copy(), f0) for _ in range(cfg.kmax + 1)]
    return IterateGrid(s=tab.s, kmax=cfg.kmax, prev_last=prev)


def predict_stage(p: SplitProblem, tab: TwoDerivativeTableau, dt: float, l: int,
                  prev: StageSource, cfg: SolverConfig):
    """Predictor stage l: implicit second-order Taylor step from the source.

    Solves w = w_src + c_l dt (Phi_I(w) + Phi_E(w_src))
               + (c_l dt)^2/2 (dPhi_E(w_src) - dPhi_I(w)); stage 0 copies.
    """
    if l == 0:
        return prev.w, prev.f, _copy_result(prev.w)
    a = tab.c[l] * dt
    rhs = prev.w + a * prev.f.phi_e + 0.5 * a * a * prev.f.dphi_e
    return _solve_stage(p, a, rhs, prev.w, cfg.newton)


def _correct_one(p: SplitProblem, tab: TwoDerivativeTableau, dt: float, l: int,
                 red: StageSource, blue_w, blue_f, quad_f, ncfg: NewtonConfig,
                 start: str):
    """One corrected stage: red constant + implicit difference + quadrature.

    ``blue_w``/``blue_f`` are the previous iterate's stage states and bundles
    at this step; ``quad_f`` lists the s bundles feeding the quadrature (equal
    to ``blue_f`` for a Jacobi sweep, partially refreshed for Gauss-Seidel).
    """
    if l == 0:
        return red.w, red.f, _copy_result(red.w)
    phis = [b.phi for b in quad_f]
    dphis = [b.dphi for b in quad_f]
    i_l = quadrature(tab, l, dt, phis, dphis)
    rhs = red.w - dt * blue_f[l].phi_i + 0.5 * dt * dt * blue_f[l].dphi_i + i_l
    w_start = blue_w[l] if start == "hierarchical" else red.w
    return _solve_stage(p, dt, rhs, w_start, ncfg)


def correct_stage(p: SplitProblem, tab: TwoDerivativeTableau, dt: float, l: int,
                  k: int, grid: IterateGrid, variant: str, cfg: SolverConfig):
    """Correction stage l producing iterate k+1 from the grid's iterate k."""
    red = grid.red_source(k + 1, variant)
    blue_w, blue_f = grid.w[k], grid.f[k]
    if variant in ("Alg2", "Limit"):
        quad_f = grid.f[k + 1][:l] + blue_f[l:]
    else:
        quad_f = blue_f
    return _correct_one(p, tab, dt, l, red, blue_w, blue_f, quad_f, cfg.newton,
                        cfg.corrector_start)


def predictor_block(p: SplitProblem, tab: TwoDerivativeTableau, dt: float,
                    src: StageSource, ncfg: NewtonConfig):
    """All predictor stages from one source; returns (states, bundles, results)."""
    ws, fs, results = [], [], []
    for l in range(tab.s):
        if l == 0:
            w, f, res = src.w, src.f, _copy_result(src.w)
        else:
            a = tab.c[l] * dt
            rhs = src.w + a * src.f.phi_e + 0.5 * a * a * src.f.dphi_e
            w, f, res = _solve_stage(p, a, rhs, src.w, ncfg)
        ws.append(w)
        fs.append(f)
        results.append(res)
    return ws, fs, results


def correction_block(p: SplitProblem, tab: TwoDerivativeTableau, dt: float,
                     red: StageSource, blue_w, blue_f, gauss_seidel: bool,
                     ncfg: NewtonConfig, start: str):
    """One full correction sweep over the stages; returns (states, bundles, results)."""
    ws, fs, results = [], [], []
    for l in range(tab.s):
        quad_f = fs[:l] + list(blue_f[l:]) if gauss_seidel else blue_f
        w, f, res = _correct_one(p, tab, dt, l, red, blue_w, blue_f, quad_f,
                                 ncfg, start)
        ws.append(w)
        fs.append(f)
        results.append(res)
    return ws, fs, results


def _trace_from(grid: IterateGrid, iters: Array, rnorms, cap_hits: int) -> StepTrace:
    last = [grid.w[k][-1] for k in range(grid.kmax + 1)]
    return StepTrace(newton_iters=iters, residual_norms=rnorms,
                     last_stage_w=last, iter_cap_hits=cap_hits)


def advance(p: SplitProblem, tab: TwoDerivativeTableau, grid: IterateGrid,
            cfg: SolverConfig):
    """One full timestep: predictor plus kmax corrections; rotates the grid."""
    dt = p.t_end / cfg.n_steps
    iters = np.zeros(cfg.kmax + 1, dtype=int)
    rnorms = [[0.0] * tab.s for _ in range(cfg.kmax + 1)]
    cap_hits = 0

    src = grid.predictor_source(cfg.variant)
    ws, fs, results = predictor_block(p, tab, dt, src, cfg.newton)
    grid.w[0], grid.f[0] = ws, fs
    for l, res in enumerate(results):
        iters[0] += res.iters
        rnorms[0][l] = res.residual_norm
        cap_hits += res.converged_by == "iter_cap"

    gauss_seidel = cfg.variant in ("Alg2", "Limit")
    for k in range(cfg.kmax):
        red = grid.red_source(k + 1, cfg.variant)
        ws, fs, results = correction_block(p, tab, dt, red, grid.w[k], grid.f[k],
                                           gauss_seidel, cfg.newton,
                                           cfg.corrector_start)
        grid.w[k + 1], grid.f[k + 1] = ws, fs
        for l, res in enumerate(results):
            iters[k + 1] += res.iters
            rnorms[k + 1][l] = res.residual_norm
            cap_hits += res.converged_by == "iter_cap"

    w_next = grid.w[cfg.kmax][-1]
    trace = _trace_from(grid, iters, rnorms, cap_hits)
    grid.rotate()
    return w_next, trace


def _resolve_reference(p: SplitProblem, reference):
    if reference is not None:
        return np.asarray(reference, dtype=float)
    if p.exact is not None:
        return np.asarray(p.exact(p.t_end), dtype=float)
    if p.ref_t_end is not None:
        return p.ref_t_end
    return None


def integrate(p: SplitProblem, cfg: SolverConfig, reference=None,
              keep_traces: bool = False) -> RunResult:
    """Run n_steps uniform steps; report per-iterate errors at t_end.

    ``reference`` overrides the problem's exact solution as the state the
    per-iterate 2-norm errors are measured against; with neither available
    the errors field is None.
    """
    if cfg.variant == "Limit":
        return limit_integrate(p, cfg, reference=reference, keep_traces=keep_traces)
    tab = builtin(cfg.q)
    grid = seed(p, cfg)
    updates = np.empty((cfg.n_steps + 1, p.dim))
    updates[0] = p.w0
    newton_per_iterate = np.zeros(cfg.kmax + 1, dtype=int)
    cap_hits = 0
    traces = [] if keep_traces else None
    final_last = None

    t0 = time.perf_counter()
    for n in range(cfg.n_steps):
        w_next, trace = advance(p, tab, grid, cfg)
        updates[n + 1] = w_next
        newton_per_iterate += trace.newton_iters
        cap_hits += trace.iter_cap_hits
        if keep_traces:
            traces.append(trace)
        if n == cfg.n_steps - 1:
            final_last = trace.last_stage_w
    wallclock = time.perf_counter() - t0

    ref = _resolve_reference(p, reference)
    errors = None
    if ref is not None:
        errors = np.array([float(np.linalg.norm(w - ref)) for w in final_last])
    return RunResult(config=cfg, t_end=p.t_end, updates=updates,
                     final_last_w=final_last, errors=errors,
                     newton_per_iterate=newton_per_iterate,
                     iter_cap_hits=cap_hits, wallclock=wallclock, traces=traces)


def limit_integrate(p: SplitProblem, cfg: SolverConfig, reference=None,
                    keep_traces: bool = False) -> RunResult:
    """Per step, sweep corrections against a fixed red term (the accepted
    update) until the max-norm stage change drops below limit_tol."""
    if cfg.variant != "Limit":
        raise ValueError("limit_integrate requires variant='Limit'")
    tab = builtin(cfg.q)
    dt = p.t_end / cfg.n_steps
    w = p.w0.copy()
    f = eval_bundle(p, w)
    updates = np.empty((cfg.n_steps + 1, p.dim))
    updates[0] = w
    total_iters = 0
    cap_hits = 0
    sweeps_per_step = []
    traces = [] if keep_traces else None

    t0 = time.perf_counter()
    for n in range(cfg.n_steps):
        src = StageSource(w, f)
        ws, fs, results = predictor_block(p, tab, dt, src, cfg.newton)
        step_iters = sum(r.iters for r in results)
        cap_hits += sum(r.converged_by == "iter_cap" for r in results)
        for sweep in range(1, cfg.limit_max_sweeps + 1):
            new_ws, new_fs, results = correction_block(
                p, tab, dt, src, ws, fs, True, cfg.newton, cfg.corrector_start)
            step_iters += sum(r.iters for r in results)
            cap_hits += sum(r.converged_by == "iter_cap" for r in results)
            delta = max(float(np.max(np.abs(a - b))) for a, b in zip(new_ws, ws))
            ws, fs = new_ws, new_fs
            if delta <= cfg.limit_tol:
                break
        else:
            raise NoConvergenceError(
                f"limit sweep at step {n} still changing by {delta:.3e} "
                f"after {cfg.limit_max_sweeps} sweeps")
        sweeps_per_step.append(sweep)
        total_iters += step_iters
        w, f = ws[-1], fs[-1]
        updates[n + 1] = w
        if keep_traces:
            traces.append(StepTrace(
                newton_iters=np.array([step_iters]),
                residual_norms=[[r.residual_norm for r in results]],
                last_stage_w=[w], sweeps=sweep))
    wallclock = time.perf_counter() - t0

    ref = _resolve_reference(p, reference)
    errors = None if ref is None else np.array([float(np.linalg.norm(w - ref))])
    return RunResult(config=cfg, t_end=p.t_end, updates=updates,
                     final_last_w=[w], errors=errors,
                     newton_per_iterate=np.array([total_iters]),
                     iter_cap_hits=cap_hits, wallclock=wallclock,
                     traces=traces, sweeps_per_step=sweeps_per_step)


def adaptive_kmax(p: SplitProblem, base_cfg: SolverConfig, start_kmax: int,
                  reference=None, cap: int = 4096):
    """Double kmax until the final-iterate error stops changing by more than
    1% relative; returns (kmax_used, converged RunResult)."""
    if start_kmax < 1:
        raise ValueError("start_kmax must be at least 1")
    kmax = start_kmax
    run = integrate(p, replace(base_cfg, kmax=kmax), reference=reference)
    if run.errors is None:
        raise ValueError("adaptive_kmax needs an exact or reference solution")
    err_prev = float(run.errors[-1])
    while True:
        if 2 * kmax > cap:
            raise CapExceededError(
                f"doubling past kmax={kmax} exceeds the ceiling {cap} "
                "with the 1% criterion still unmet")
        kmax *= 2
        run = integrate(p, replace(base_cfg, kmax=kmax), reference=reference)
        err = float(run.errors[-1])
        diff = abs(err - err_prev)
        if diff == 0.0 or (err > 0 and diff / err <= 0.01):
            return kmax, run
        err_prev = err
