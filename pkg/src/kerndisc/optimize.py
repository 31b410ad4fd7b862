"""Point-set optimization: gradient descent on E^2, the exponential-sum
annihilation system, canonical grids, and the 1-D closed form.

Descent minimizes the squared discrepancy directly (for periodic kernels
the constant integral terms drop, leaving the mean of the Gram matrix).
The annihilation system drives I(Y) = sum_n |sum_m exp(2 i pi <y^m,
alpha^n>)|^2 to zero over a target set of nonzero lattice indices; its
residual I(Y)/N^2 bounds the discrepancy head, leaving only the
coefficient tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize as _sciopt

from . import lattice
from .discrepancy import DiscrepancyReport, MonteCarlo, periodic_error, physical_error
from .kernels import Kernel, PeriodicKernel, SplineKernel, TransportedKernel
from .lattice import LatticeIndex
from .rkhs import PointSet
from .sampling import MT19937, uniform_points

__all__ = [
    "OptimizerConfig",
    "DescentTrace",
    "Cond1Problem",
    "Cond1Result",
    "descend_physical",
    "solve_cond1",
    "cond1_functional",
    "cond1_gradient",
    "canonical_grid",
    "box_targets",
    "midpoint_1d",
    "optimize_points",
]

_BOUNDARY_MARGIN = 1e-7  # keeps transported points off the erfinv singularity


@dataclass
class OptimizerConfig:
    """Descent settings; defaults are stable across all table cells.

    step_size defaults to 0.1/N and gradient_tolerance to 1e-9 N.  When
    the relative objective decrease stalls for ``stall_iterations`` while
    the gradient is still above tolerance, the search restarts from the
    incumbent with a 10x step (the flat-landscape workaround), up to
    ``max_restarts`` times.
    """

    max_iterations: int = 10_000
    step_size: float | None = None
    step_schedule: str = "backtracking"  # or "constant"
    gradient_tolerance: float | None = None
    objective_tolerance: float = 0.0
    seed: int = 0
    stall_iterations: int = 50
    max_restarts: int = 3

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.step_schedule not in ("backtracking", "constant"):
            raise ValueError("step_schedule must be 'backtracking' or 'constant'")
        if self.step_size is not None and self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if self.gradient_tolerance is not None and self.gradient_tolerance <= 0:
            raise ValueError("gradient_tolerance must be positive")
        if self.objective_tolerance < 0:
            raise ValueError("objective_tolerance must be >= 0")


@dataclass
class DescentTrace:
    """Objective per accepted iterate (nonincreasing under backtracking)."""

    objectives: list[float] = field(default_factory=list)
    iterations: int = 0
    restarts: int = 0
    stopped_by: str = "max_iterations"


class _Objective:
    """Objective/gradient pair with the projection for its domain."""

    def __init__(self, fun, grad, project, offset: float):
        self.fun = fun
        self.grad = grad
        self.project = project
        self.offset = offset  # E^2 = fun + offset


def _wrap_unit(y: np.ndarray) -> np.ndarray:
    return np.mod(y, 1.0)


def _clip_unit(y: np.ndarray) -> np.ndarray:
    return np.clip(y, 0.0, 1.0)


def _clip_interior(y: np.ndarray) -> np.ndarray:
    return np.clip(y, _BOUNDARY_MARGIN, 1.0 - _BOUNDARY_MARGIN)


def _tensor_pair_grad(y: np.ndarray, factor_fn, prime_fn) -> np.ndarray:
    """Gradient row-sums 2 sum_m g'_d prod_{e != d} g_e over ordered pairs.

    factor_fn/prime_fn(d, rows, cols) evaluate the per-dimension factor
    and its derivative on a column block; the diagonal pair (constant in
    y) is masked.  Columns are blocked so memory stays near
    dim * n * block doubles.
    """
    n, dim = y.shape
    grad = np.zeros((n, dim))
    block = max(1, min(n, (1 << 24) // max(1, dim * n)))
    for lo in range(0, n, block):
        hi = min(lo + block, n)
        factors = [factor_fn(d, y, lo, hi) for d in range(dim)]
        idx = np.arange(lo, hi)
        suffixes = [None] * dim
        running = np.ones((n, hi - lo))
        for e in range(dim - 1, -1, -1):
            suffixes[e] = running
            running = running * factors[e]
        prefix = np.ones((n, hi - lo))
        for d in range(dim):
            contrib = prime_fn(d, y, lo, hi) * prefix * suffixes[d]
            contrib[idx, idx - lo] = 0.0
            grad[:, d] += 2.0 * contrib.sum(axis=1)
            prefix = prefix * factors[d]
    return grad


def _periodic_objective(kernel: PeriodicKernel, n: int) -> _Objective:
    def fun(y: np.ndarray) -> float:
        return kernel.pair_mean(y) - 1.0

    def factor_fn(d, y, lo, hi):
        return kernel.factor(y[:, d, None] - y[None, lo:hi, d])

    def prime_fn(d, y, lo, hi):
        return kernel.factor_prime(y[:, d, None] - y[None, lo:hi, d])

    def grad(y: np.ndarray) -> np.ndarray:
        return _tensor_pair_grad(y, factor_fn, prime_fn) / (n * n)

    return _Objective(fun, grad, _wrap_unit, 0.0)


def _spline_objective(kernel: SplineKernel, n: int) -> _Objective:
    def fun(y: np.ndarray) -> float:
        return (kernel.integral_double() + kernel.pair_mean(y)
                - 2.0 * float(kernel.integral_single(y).mean()))

    def factor_fn(d, y, lo, hi):
        xd = y[:, d, None]
        yd = y[None, lo:hi, d]
        return np.minimum(xd, yd) - xd * yd

    def prime_fn(d, y, lo, hi):
        xd = y[:, d, None]
        yd = y[None, lo:hi, d]
        return (xd < yd).astype(float) - yd

    def grad(y: np.ndarray) -> np.ndarray:
        g = _tensor_pair_grad(y, factor_fn, prime_fn) / (n * n)
        # diagonal Gram entries prod (y - y^2) and the single integrals
        # prod y(1-y)/2 both depend on y
        for d in range(kernel.dim):
            others_diag = np.ones(y.shape[0])
            others_int = np.ones(y.shape[0])
            for e in range(kernel.dim):
                if e == d:
                    continue
                others_diag *= y[:, e] - y[:, e] ** 2
                others_int *= y[:, e] * (1.0 - y[:, e]) / 2.0
            deriv = 1.0 - 2.0 * y[:, d]
            g[:, d] += deriv * others_diag / (n * n)
            g[:, d] -= (2.0 / n) * (deriv / 2.0) * others_int
        return g

    return _Objective(fun, grad, _clip_unit, 0.0)


def _transported_objective(kernel: TransportedKernel, n: int, mc: MonteCarlo) -> _Objective:
    gen = MT19937(mc.seed)
    a = gen.random(mc.samples * kernel.dim).reshape(mc.samples, kernel.dim)
    b = gen.random(mc.samples * kernel.dim).reshape(mc.samples, kernel.dim)
    double_est = float(kernel.elementwise(a, b).mean())
    ua = kernel.transport.apply(a)
    w_single = np.full(mc.samples, 1.0 / mc.samples)

    def fun(y: np.ndarray) -> float:
        u = kernel.transport.apply(y)
        pair = float(kernel.kernel_mapped(u, u).mean())
        single = float(kernel.kernel_mapped(u, ua).mean(axis=1).mean())
        return pair - 2.0 * single

    def grad(y: np.ndarray) -> np.ndarray:
        u = kernel.transport.apply(y)
        sprime = kernel.transport.apply_prime(y)
        g_pair = kernel.grad_sum_mapped(u, u, np.ones(y.shape[0]))
        g_single = kernel.grad_sum_mapped(u, ua, w_single)
        return (2.0 / (n * n) * g_pair - 2.0 / n * g_single) * sprime

    return _Objective(fun, grad, _clip_interior, double_est)


def build_objective(kernel: Kernel, n: int,
                    mc: MonteCarlo | None = None) -> _Objective:
    if isinstance(kernel, PeriodicKernel):
        return _periodic_objective(kernel, n)
    if isinstance(kernel, SplineKernel):
        return _spline_objective(kernel, n)
    if isinstance(kernel, TransportedKernel):
        return _transported_objective(kernel, n, mc or MonteCarlo())
    raise ValueError(f"no descent objective for kernel {kernel.kernel_id!r}")


def descend_physical(kernel: Kernel, start: PointSet,
                     config: OptimizerConfig | None = None,
                     mc: MonteCarlo | None = None,
                     ) -> tuple[PointSet, DiscrepancyReport, DescentTrace]:
    """Projected gradient descent on the squared discrepancy.

    Returns the improved point set, its discrepancy report (exact for
    periodic/spline kernels, the frozen-sample estimate for transported
    ones), and the objective trace.
    """
    config = config or OptimizerConfig()
    if kernel.dim != start.dim:
        raise ValueError("kernel/point dimension mismatch")
    n = start.n
    obj = build_objective(kernel, n, mc)
    step0 = config.step_size if config.step_size is not None else 0.1 / n
    gtol = config.gradient_tolerance if config.gradient_tolerance is not None else 1e-9 * n

    y = obj.project(start.coords.copy())
    f = obj.fun(y)
    trace = DescentTrace(objectives=[f])
    best_y, best_f = y.copy(), f
    step = step0
    stall = 0
    restarts = 0

    for it in range(config.max_iterations):
        trace.iterations = it + 1
        g = obj.grad(y)
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient at iteration {it}")
        gnorm = float(np.linalg.norm(g))
        if gnorm < gtol:
            trace.stopped_by = "gradient"
            break
        if config.step_schedule == "constant":
            y = obj.project(y - step * g)
            f_new = obj.fun(y)
        else:
            f_new = f
            trial = step
            accepted = False
            for _ in range(40):
                cand = obj.project(y - trial * g)
                f_cand = obj.fun(cand)
                if f_cand < f - 1e-4 * trial * gnorm * gnorm:
                    y, f_new = cand, f_cand
                    accepted = True
                    # gentle growth keeps the search adaptive
                    step = trial * 1.5
                    break
                trial /= 2.0
            if not accepted:
                stall = config.stall_iterations  # force restart logic below
        decrease = f - f_new
        f = min(f, f_new)
        trace.objectives.append(f)
        if f < best_f:
            best_f, best_y = f, y.copy()
        if config.objective_tolerance > 0 and 0 <= decrease < config.objective_tolerance:
            trace.stopped_by = "objective"
            break
        rel = decrease / max(abs(f), 1e-300)
        if rel < 1e-13:
            stall += 1
        else:
            stall = 0
        if stall >= config.stall_iterations:
            if restarts >= config.max_restarts:
                trace.stopped_by = "stalled"
                break
            restarts += 1
            stall = 0
            y = best_y.copy()
            f = best_f
            step = step * 10.0
    trace.restarts = restarts

    points = PointSet(obj.project(best_y))
    if isinstance(kernel, PeriodicKernel):
        report = periodic_error(kernel, points)
    elif isinstance(kernel, SplineKernel):
        report = physical_error(kernel, points, "exact")
    else:
        report = physical_error(kernel, points, mc or MonteCarlo())
    return points, report, trace


# exponential-sum annihilation -------------------------------------------------

@dataclass(frozen=True)
class Cond1Problem:
    """Annihilation targets: nonzero lattice indices whose exponential
    sums over the point set should vanish."""

    targets: np.ndarray  # (k, dim) integer array
    dim: int

    @staticmethod
    def from_indices(indices, dim: int) -> "Cond1Problem":
        rows = []
        for idx in indices:
            if isinstance(idx, LatticeIndex):
                if idx.dim != dim:
                    raise ValueError("target index dimension mismatch")
                row = idx.dense()
            else:
                row = tuple(int(v) for v in np.atleast_1d(idx))
                if len(row) != dim:
                    raise ValueError("target index dimension mismatch")
            if not any(row):
                raise ValueError("targets must be nonzero lattice indices")
            rows.append(row)
        if not rows:
            raise ValueError("at least one target is required")
        return Cond1Problem(np.array(rows, dtype=float), dim)


@dataclass
class Cond1Result:
    points: PointSet
    residual: float
    infeasible: bool = False
    iterations: int = 0
    converged: bool = False


def _cond1_sums(problem: Cond1Problem, y: np.ndarray) -> np.ndarray:
    phases = 2.0 * math.pi * (y @ problem.targets.T)
    return np.exp(1j * phases).sum(axis=0)


def cond1_functional(problem: Cond1Problem, points: PointSet | np.ndarray) -> float:
    """I(Y) = sum over targets of |sum_m exp(2 i pi <y^m, alpha>)|^2."""
    y = points.coords if isinstance(points, PointSet) else np.asarray(points, dtype=float)
    s = _cond1_sums(problem, y)
    return float(np.sum(np.abs(s) ** 2))


def cond1_gradient(problem: Cond1Problem, points: PointSet | np.ndarray) -> np.ndarray:
    """Real gradient of I(Y) with respect to the point coordinates."""
    y = points.coords if isinstance(points, PointSet) else np.asarray(points, dtype=float)
    phases = 2.0 * math.pi * (y @ problem.targets.T)
    e = np.exp(1j * phases)  # (n, k)
    s = e.sum(axis=0)
    # d|S_k|^2 / dy_nd = -4 pi alpha_kd Im(conj(S_k) e_{nk})
    w = np.imag(np.conj(s)[None, :] * e)  # (n, k)
    return -4.0 * math.pi * (w @ problem.targets)


def solve_cond1(problem: Cond1Problem, start: PointSet,
                config: OptimizerConfig | None = None) -> Cond1Result:
    """Minimize I(Y) by L-BFGS with the analytic gradient.

    Success means residual I(Y)/N^2 below 1e-8.  With a single point and
    any nonzero target the system is infeasible (a unit-modulus
    exponential cannot vanish); the result carries the residual floor
    and an infeasibility flag.
    """
    config = config or OptimizerConfig(max_iterations=20_000)
    if start.dim != problem.dim:
        raise ValueError("problem/point dimension mismatch")
    n = start.n
    if n == 1:
        res = cond1_functional(problem, start) / (n * n)
        return Cond1Result(points=start, residual=res, infeasible=True)

    def fun(flat: np.ndarray):
        y = flat.reshape(n, problem.dim)
        return cond1_functional(problem, y), cond1_gradient(problem, y).ravel()

    out = _sciopt.minimize(
        fun, start.coords.ravel(), jac=True, method="L-BFGS-B",
        options={"maxiter": config.max_iterations, "ftol": 1e-18, "gtol": 1e-14,
                 "maxcor": 20},
    )
    y = np.mod(out.x.reshape(n, problem.dim), 1.0)
    residual = cond1_functional(problem, y) / (n * n)
    return Cond1Result(points=PointSet(y), residual=residual,
                       iterations=int(out.nit), converged=residual < 1e-8)


def canonical_grid(resolutions) -> PointSet:
    """Tensor grid y^n = (n_d / R_d) with mixed-radix index n.

    For every nonzero lattice index in the box 0 <= alpha_d < R_d the
    exponential sum over the grid vanishes identically.
    """
    rs = [int(r) for r in resolutions]
    if any(r < 1 for r in rs):
        raise ValueError("grid resolutions must be >= 1")
    n_total = math.prod(rs)
    if n_total > 10**7:
        raise ValueError("grid too large (over 1e7 points)")
    coords = np.empty((n_total, len(rs)))
    for n in range(n_total):
        rem = n
        for d, r in enumerate(rs):
            coords[n, d] = (rem % r) / r
            rem //= r
    return PointSet(coords)


def box_targets(resolutions) -> list[LatticeIndex]:
    """The nonzero lattice indices of the box 0 <= alpha_d < R_d."""
    rs = [int(r) for r in resolutions]
    dim = len(rs)
    out = []
    for n in range(math.prod(rs)):
        rem = n
        entry = {}
        for d, r in enumerate(rs):
            v = rem % r
            rem //= r
            if v:
                entry[d] = v
        if entry:
            out.append(LatticeIndex.make(dim, entry))
    return out


def midpoint_1d(n: int) -> PointSet:
    """The 1-D midpoints (2n - 1) / 2N, sorted."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return PointSet(((2.0 * np.arange(1, n + 1) - 1.0) / (2.0 * n)).reshape(-1, 1))


def _cond1_targets_for(kernel: PeriodicKernel, n: int) -> Cond1Problem:
    terms = lattice.enumerate_decreasing(kernel.profile, n + 1)
    return Cond1Problem.from_indices([t.index for t in terms[1:]], kernel.dim)


def optimize_points(kernel: Kernel, n: int, seed: int,
                    config: OptimizerConfig | None = None,
                    mc: MonteCarlo | None = None,
                    ) -> tuple[PointSet, DiscrepancyReport, dict]:
    """The full optimized-points pipeline for one table cell.

    Random start, gradient descent, then (periodic kernels) refinement by
    the annihilation system over the N largest nonzero-coefficient
    indices, keeping whichever point set scores better.  The transported
    Gaussian kernel, whose descent landscape is nearly flat, additionally
    tries the annihilation solution of the matching periodic Gaussian as
    an alternative start.
    """
    config = config or OptimizerConfig()
    start = uniform_points(seed, n, kernel.dim)
    info: dict = {"seed": seed}
    points, report, trace = descend_physical(kernel, start, config, mc)
    info["descent_iterations"] = trace.iterations
    info["descent_stopped_by"] = trace.stopped_by

    if isinstance(kernel, SplineKernel) and kernel.dim == 1:
        # the 1-D optimum is the equally-spaced family; descent lands on
        # an arbitrary shift of it, so prefer the symmetric representative
        mids = midpoint_1d(n)
        mid_rep = physical_error(kernel, mids, "exact")
        if mid_rep.value <= report.value + 1e-14:
            points, report = mids, mid_rep

    if isinstance(kernel, PeriodicKernel) and n > 1:
        problem = _cond1_targets_for(kernel, n)
        refined = solve_cond1(problem, points, config)
        info["cond1_residual"] = refined.residual
        candidate = periodic_error(kernel, refined.points)
        if candidate.value < report.value:
            points, report = refined.points, candidate
        if refined.residual >= 1e-8:
            # descent parked in a poor basin; retry annihilation from the
            # raw random start
            alt = solve_cond1(problem, start, config)
            alt_rep = periodic_error(kernel, alt.points)
            if alt_rep.value < report.value:
                points, report = alt.points, alt_rep
                info["cond1_residual"] = alt.residual

    if isinstance(kernel, TransportedKernel) and kernel.family == "gauss" and n > 1:
        # the nearly-flat landscape can park descent close to the random
        # start; when progress is poor, seed from the annihilation
        # solution of the matching periodic kernel (the flat-landscape
        # workaround) and descend again
        baseline = physical_error(kernel, start, mc or MonteCarlo())
        if report.value > 0.7 * baseline.value or trace.stopped_by == "stalled":
            twin = PeriodicKernel("gauss", kernel.dim)
            problem = _cond1_targets_for(twin, n)
            seeded = solve_cond1(problem, start, config)
            cand_pts, cand_rep, _ = descend_physical(kernel, seeded.points, config, mc)
            if cand_rep.value < report.value:
                points, report = cand_pts, cand_rep
                info["used_periodic_seed"] = True

    return points, report, info
