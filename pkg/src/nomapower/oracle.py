"""Independent brute-force and numerical validators.

Everything here deliberately avoids the closed forms and fixed-point
machinery of the solver modules: group feasibility is decided by solving
the tight rate constraints as a plain linear system, optima are located
by exhaustive grid search, and curvature is probed with finite
differences.  Instances are bounded at entry because the searches are
combinatorial.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import NetworkTopology, RateDemands


class OracleInfeasibleError(RuntimeError):
    """No feasible grid point exists at the requested resolution."""


@dataclass(frozen=True)
class GridPowerResult:
    q: np.ndarray
    total_power: float
    allocations: tuple
    points_searched: int
    points_feasible: int


@dataclass(frozen=True)
class GridRateResult:
    powers: np.ndarray
    sum_rate: float
    points_searched: int
    points_feasible: int


def tight_constraint_matrix(demands: np.ndarray, bandwidth: float) -> np.ndarray:
    """Coefficient matrix of the rate constraints set to equality.

    Row j encodes  p_j - (2^(R_j/B)-1) * sum_{n>j} p_n  =  (2^(R_j/B)-1) H_j.
    """
    coef = np.exp2(np.asarray(demands, dtype=float) / bandwidth) - 1.0
    n = coef.size
    t = np.eye(n)
    for j in range(n):
        t[j, j + 1:] = -coef[j]
    return t


def minimal_group_powers(demands: np.ndarray, h_points: np.ndarray,
                         bandwidth: float) -> np.ndarray:
    """Minimum-power splits for a batch of interference vectors.

    Solves the tight linear system directly; row k of ``h_points`` gives
    one (n,) interference vector and row k of the result the matching
    per-user powers.
    """
    coef = np.exp2(np.asarray(demands, dtype=float) / bandwidth) - 1.0
    t_inv = np.linalg.inv(tight_constraint_matrix(demands, bandwidth))
    return (coef * np.atleast_2d(h_points)) @ t_inv.T


def grid_power_min(topology: NetworkTopology, demands: RateDemands,
                   resolution: float, max_points: int = 20_000_000) -> GridPowerResult:
    """Exhaustive search for the cheapest feasible per-BS power vector.

    Enumerates q on a ``resolution``-spaced grid up to the budgets; a
    point is feasible when, at the interference it creates, every group's
    demands can be met within its q entry (checked by the linear-system
    route).  Only small instances are accepted.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    if topology.num_cells > 2 or topology.num_subchannels > 2:
        raise ValueError("grid oracle accepts at most 2 cells x 2 subchannels")
    for i, m in topology.groups():
        if topology.group_size(i, m) > 3:
            raise ValueError("grid oracle accepts at most 3 users per group")

    axes = []
    for i in range(topology.num_cells):
        steps = int(np.floor(topology.budgets[i] / resolution))
        axes.extend([np.arange(steps + 1) * resolution] * topology.num_subchannels)
    total = int(np.prod([a.size for a in axes]))
    if total > max_points:
        raise ValueError(f"grid of {total} points exceeds the {max_points} cap")

    mesh = np.meshgrid(*axes, indexing="ij")
    grid = np.stack([g.ravel() for g in mesh], axis=1).reshape(
        -1, topology.num_cells, topology.num_subchannels)
    keep = np.all(grid.sum(axis=2) <= topology.budgets[None, :] + 1e-12, axis=1)
    grid = grid[keep]

    feasible = np.ones(grid.shape[0], dtype=bool)
    minimal = {}
    for i, m in topology.groups():
        g = topology.gains[i][m]
        others = np.delete(np.arange(topology.num_cells), i)
        z = grid[:, others, m] @ g[others] + topology.noise_power
        ratio = z / g[i]
        h = np.maximum.accumulate(ratio[:, ::-1], axis=1)[:, ::-1]
        p = minimal_group_powers(demands.rates[i][m], h, topology.bandwidth)
        minimal[(i, m)] = p
        feasible &= p.sum(axis=1) <= grid[:, i, m] + 1e-12

    n_feasible = int(feasible.sum())
    if n_feasible == 0:
        raise OracleInfeasibleError(
            f"none found at resolution {resolution!r}")
    totals = grid.reshape(grid.shape[0], -1).sum(axis=1)
    totals = np.where(feasible, totals, np.inf)
    best = int(np.argmin(totals))   # argmin takes the first, lexicographic order
    best_alloc = tuple(
        tuple(minimal[(i, m)][best] for m in range(topology.num_subchannels))
        for i in range(topology.num_cells))
    return GridPowerResult(q=grid[best], total_power=float(totals[best]),
                           allocations=best_alloc, points_searched=grid.shape[0],
                           points_feasible=n_feasible)


def grid_rate_max_group(demands: np.ndarray, h: np.ndarray, q: float,
                        resolution: float, bandwidth: float = 1.0,
                        max_points: int = 20_000_000) -> GridRateResult:
    """Best rate-feasible split of total power ``q`` on a simplex grid."""
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    demands = np.asarray(demands, dtype=float)
    h = np.asarray(h, dtype=float)
    n = demands.size
    if n > 3:
        raise ValueError("grid oracle accepts at most 3 users per group")

    steps = int(np.floor(q / resolution))
    levels = np.arange(steps + 1) * resolution
    if n == 1:
        points = np.array([[q]])
    elif n == 2:
        points = np.stack([levels, q - levels], axis=1)
    else:
        if (steps + 1) ** 2 > max_points:
            raise ValueError("simplex grid exceeds the point cap")
        p1, p2 = np.meshgrid(levels, levels, indexing="ij")
        p1, p2 = p1.ravel(), p2.ravel()
        keep = p1 + p2 <= q + 1e-12
        points = np.stack([p1[keep], p2[keep], q - p1[keep] - p2[keep]], axis=1)
    points = np.maximum(points, 0.0)
    return _best_feasible_split(points, demands, h, q, bandwidth)


def _best_feasible_split(points, demands, h, q, bandwidth):
    growth = np.exp2(demands / bandwidth) - 1.0
    tails = np.zeros_like(points)
    if points.shape[1] > 1:
        tails[:, :-1] = np.cumsum(points[:, ::-1], axis=1)[:, ::-1][:, 1:]
    slack = points - growth[None, :] * (tails + h[None, :])
    feasible = np.all(slack >= -1e-12 * max(q, 1.0), axis=1)
    n_feasible = int(feasible.sum())
    if n_feasible == 0:
        raise OracleInfeasibleError("none found at this resolution")
    rates = np.where(points > 0,
                     bandwidth * np.log1p(points / (tails + h[None, :])) / np.log(2.0),
                     0.0).sum(axis=1)
    rates = np.where(feasible, rates, -np.inf)
    best = int(np.argmax(rates))    # argmax takes the first, lexicographic order
    return GridRateResult(powers=points[best], sum_rate=float(rates[best]),
                          points_searched=points.shape[0],
                          points_feasible=n_feasible)


@dataclass(frozen=True)
class FdHessianReport:
    hessian: np.ndarray
    minors: np.ndarray
    psd: bool
    step: float
    asymmetry: float


def fd_hessian_psd(objective, point: np.ndarray, step: float | None = None,
                   minor_tol: float = -1e-6,
                   asymmetry_tol: float = 1e-4) -> FdHessianReport:
    """Finite-difference Hessian with a positive-semidefiniteness verdict.

    Diagonal entries come from three-point second differences.  Every
    off-diagonal entry is estimated twice, by the four-point cross
    stencil and through the second difference along the diagonal
    direction e_k + e_l; the two routes agree for a healthy step, so a
    large disagreement flags cancellation and raises instead of
    returning garbage.
    """
    point = np.asarray(point, dtype=float)
    n = point.size
    if step is None:
        step = 1e-5 * max(float(np.max(np.abs(point))), 1e-12)
    h = step
    center = objective(point)

    def at(*shifts):
        x = point.copy()
        for index, amount in shifts:
            x[index] += amount
        return objective(x)

    diag = np.empty(n)
    for k in range(n):
        diag[k] = (at((k, h)) - 2.0 * center + at((k, -h))) / h ** 2

    cross = np.zeros((n, n))
    paired = np.zeros((n, n))
    for k in range(n):
        for l in range(k + 1, n):
            cross[k, l] = (at((k, h), (l, h)) - at((k, h), (l, -h))
                           - at((k, -h), (l, h)) + at((k, -h), (l, -h))) \
                / (4.0 * h ** 2)
            along = (at((k, h), (l, h)) - 2.0 * center
                     + at((k, -h), (l, -h))) / h ** 2
            paired[k, l] = 0.5 * (along - diag[k] - diag[l])

    hessian = np.diag(diag)
    upper = np.triu_indices(n, k=1)
    hessian[upper] = 0.5 * (cross[upper] + paired[upper])
    hessian = hessian + np.triu(hessian, k=1).T

    scale = max(float(np.max(np.abs(hessian))), 1e-300)
    asymmetry = float(np.max(np.abs(cross[upper] - paired[upper]))) / scale \
        if n > 1 else 0.0
    if asymmetry > asymmetry_tol:
        raise ValueError(
            f"finite-difference estimates disagree by {asymmetry:.2e} "
            f"(> {asymmetry_tol:.0e}); increase the step (currently {step!r})")
    minors = np.array([np.linalg.det(hessian[:k, :k]) for k in range(1, n + 1)])
    return FdHessianReport(hessian=hessian, minors=minors,
                           psd=bool(np.all(minors >= minor_tol)),
                           step=step, asymmetry=asymmetry)


@dataclass(frozen=True)
class ProbeCounterexample:
    property_name: str
    q: np.ndarray
    scale_factor: float | None
    values: tuple


@dataclass(frozen=True)
class ProbeReport:
    trials: int
    counterexamples: tuple
    passed: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "passed", len(self.counterexamples) == 0)


def standard_function_probe(interference_map, shape, trials: int,
                            seed: int, magnitude: float = 1.0) -> ProbeReport:
    """Randomized check of the standard-interference-function properties.

    For each trial draws q >= 0 of the given shape and tests positivity
    (f(q) > 0), monotonicity (q1 >= q2 implies f(q1) >= f(q2)) and
    scalability (lam * f(q) > f(lam * q) for lam > 1).  Counterexamples
    are reported with their inputs verbatim.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    bad = []
    for _ in range(trials):
        q1 = rng.uniform(0.0, magnitude, size=shape)
        f1 = np.asarray(interference_map(q1))
        if not np.all(f1 > 0.0):
            bad.append(ProbeCounterexample("positivity", q1, None, (f1,)))
        q2 = q1 * rng.uniform(0.0, 1.0, size=shape)
        f2 = np.asarray(interference_map(q2))
        if not np.all(f1 >= f2):
            bad.append(ProbeCounterexample("monotonicity", q1, None, (f1, f2, q2)))
        lam = rng.uniform(1.0, 10.0)
        if lam <= 1.0:
            lam = 1.0 + 1e-9
        f_scaled = np.asarray(interference_map(lam * q1))
        if not np.all(lam * f1 > f_scaled):
            bad.append(ProbeCounterexample("scalability", q1, lam, (f1, f_scaled)))
    return ProbeReport(trials=trials, counterexamples=tuple(bad))
