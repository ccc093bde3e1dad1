"""Sum-power minimization.

The per-group optimum has a closed form: every rate constraint is tight,
so a backward recursion over the cumulative tail powers yields the user
powers directly.  Substituting the closed form into the network problem
leaves only the per-BS totals ``q``, coupled through the interference map
``f``; ``f`` is a standard interference function, so the distributed
fixed-point sweep converges to the component-wise minimal solution
whenever one exists.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import (NetworkTopology, PowerAllocation, RateDemands,
                      effective_interference)


@dataclass(frozen=True)
class FixedPointReport:
    """Outcome of the fixed-point power-control iteration."""

    q_star: np.ndarray
    iterations: int
    residual: float
    budget_feasible: np.ndarray
    converged: bool
    trace: np.ndarray

    @property
    def feasible(self) -> bool:
        return self.converged and bool(np.all(self.budget_feasible))


def demand_weights(demands: np.ndarray, bandwidth: float) -> np.ndarray:
    """Weights w_j = (2^(R_j/B) - 1) * 2^(sum_{s<j} R_s/B) for one group.

    The minimum total power of a group is the dot product of these weights
    with the per-user effective interference.
    """
    r = np.asarray(demands, dtype=float) / bandwidth
    before = np.concatenate(([0.0], np.cumsum(r)[:-1]))
    return (np.exp2(r) - 1.0) * np.exp2(before)


def min_power_user_allocation(demands: np.ndarray, h: np.ndarray,
                              bandwidth: float) -> np.ndarray:
    """Closed-form minimum-power split for one group.

    Solves the tight rate equations by backward recursion on the tail
    sums b_j = sum_{n>=j} p_n:

        b_j = 2^(R_j/B) * b_{j+1} + (2^(R_j/B) - 1) * H_j

    Every user ends up exactly at its rate demand and all powers are
    strictly positive.
    """
    r = np.asarray(demands, dtype=float) / bandwidth
    h = np.asarray(h, dtype=float)
    growth = np.exp2(r)
    n = r.size
    b = np.zeros(n + 1)
    for j in range(n - 1, -1, -1):
        b[j] = growth[j] * b[j + 1] + (growth[j] - 1.0) * h[j]
    return b[:-1] - b[1:]


def interference_map(topology: NetworkTopology, demands: RateDemands,
                     q: np.ndarray) -> np.ndarray:
    """Reduced interference map f(q), an (I, M) array.

    f_im(q) is the minimum total power BS i needs on subchannel m to meet
    its users' demands against the interference produced by ``q``; it
    equals the group total of :func:`min_power_user_allocation`.
    """
    out = np.empty((topology.num_cells, topology.num_subchannels))
    for i, m in topology.groups():
        w = demand_weights(demands.rates[i][m], topology.bandwidth)
        h = effective_interference(topology, q, i, m)
        out[i, m] = w @ h
    return out


def dpc_spm(topology: NetworkTopology, demands: RateDemands,
            q0: np.ndarray | None = None, tol: float = 1e-8,
            rel_tol: float = 1e-10, max_iter: int = 10_000,
            sweep: str = "gauss-seidel") -> FixedPointReport:
    """Distributed power control for sum-power minimization.

    Iterates q_im <- f_im(q) in ascending (cell, subchannel) order.  The
    default sweep refreshes q in place (Gauss-Seidel); ``sweep="jacobi"``
    updates all entries from the previous iterate instead.  Stops once the
    largest element change is <= ``tol`` and the relative sum-power change
    is <= ``rel_tol``, or after ``max_iter`` sweeps.

    Non-convergence is reported, not raised: it indicates the demands are
    likely infeasible at any power level.
    """
    if tol <= 0 or max_iter < 1:
        raise ValueError("tol must be > 0 and max_iter >= 1")
    if sweep not in ("gauss-seidel", "jacobi"):
        raise ValueError(f"unknown sweep mode {sweep!r}")
    if q0 is None:
        q = np.repeat(topology.budgets[:, None] / topology.num_subchannels,
                      topology.num_subchannels, axis=1)
    else:
        q = np.array(q0, dtype=float)
        if q.shape != (topology.num_cells, topology.num_subchannels):
            raise ValueError("q0 has the wrong shape")
        if np.any(q < 0):
            raise ValueError("q0 must be non-negative")

    trace = []
    converged = False
    iterations = 0
    residual = np.inf
    for iterations in range(1, max_iter + 1):
        if sweep == "jacobi":
            q = interference_map(topology, demands, q)
        else:
            for i, m in topology.groups():
                w = demand_weights(demands.rates[i][m], topology.bandwidth)
                h = effective_interference(topology, q, i, m)
                q[i, m] = w @ h
        trace.append(q.sum())
        if not np.all(np.isfinite(q)) or q.max() > 1e9 * topology.budgets.max():
            # expansive coupling: the iteration runs away, no fixed point
            residual = np.inf
            break
        # the residual equals the next sweep's element change, so testing it
        # directly applies the stopping rule without a confirming sweep
        mapped = interference_map(topology, demands, q)
        residual = float(np.max(np.abs(q - mapped)))
        rel_change = abs(q.sum() - mapped.sum()) / max(q.sum(), 1e-300)
        if residual <= tol and rel_change <= rel_tol:
            converged = True
            break

    budget_ok = q.sum(axis=1) <= topology.budgets * (1.0 + 1e-12)
    return FixedPointReport(q_star=q, iterations=iterations, residual=residual,
                            budget_feasible=budget_ok, converged=converged,
                            trace=np.array(trace))


def assemble_full_solution(topology: NetworkTopology, demands: RateDemands,
                           q_star: np.ndarray,
                           residual_tol: float = 1e-6) -> PowerAllocation:
    """Per-user powers at a converged fixed point.

    Evaluates the effective interference at ``q_star`` and applies the
    closed-form split per group; group totals reproduce ``q_star``.
    """
    f = interference_map(topology, demands, q_star)
    residual = float(np.max(np.abs(q_star - f)))
    if residual > residual_tol:
        raise ValueError(
            f"q_star is not a fixed point (residual {residual:.3e} > {residual_tol:.1e})")
    powers = []
    for i in range(topology.num_cells):
        row = []
        for m in range(topology.num_subchannels):
            h = effective_interference(topology, q_star, i, m)
            row.append(min_power_user_allocation(demands.rates[i][m], h,
                                                 topology.bandwidth))
        powers.append(tuple(row))
    return PowerAllocation(tuple(powers))
