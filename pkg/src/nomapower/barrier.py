"""Small dense log-barrier solver.

Minimizes

    f(z) = - sum_t  w_t * ln(d_t + g_t . z)  +  c . z
    s.t.   A z <= b

for strictly positive weights ``w``, the shape of every convex
subproblem in this package (sums of negative logs of affine expressions
plus a linear term, under linear inequalities).  Problems here have tens
of variables at most, so a dense Newton barrier method is simple, fast
and fully deterministic.

Callers are expected to pre-scale variables to O(1); the duality gap and
KKT residual are reported in the caller's (scaled) units.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LogAffineObjective:
    weights: np.ndarray   # (T,) > 0
    offsets: np.ndarray   # (T,)
    rows: np.ndarray      # (T, n)
    linear: np.ndarray    # (n,)

    def arguments(self, z: np.ndarray) -> np.ndarray:
        return self.offsets + self.rows @ z

    def in_domain(self, z: np.ndarray) -> bool:
        return self.weights.size == 0 or bool(np.all(self.arguments(z) > 0.0))

    def value(self, z: np.ndarray) -> float:
        v = self.linear @ z
        if self.weights.size:
            v -= self.weights @ np.log(self.arguments(z))
        return float(v)

    def grad(self, z: np.ndarray) -> np.ndarray:
        g = self.linear.copy()
        if self.weights.size:
            g -= (self.weights / self.arguments(z)) @ self.rows
        return g

    def hess(self, z: np.ndarray) -> np.ndarray:
        n = self.linear.size
        if not self.weights.size:
            return np.zeros((n, n))
        scaled = (np.sqrt(self.weights) / self.arguments(z))[:, None] * self.rows
        return scaled.T @ scaled


@dataclass(frozen=True)
class BarrierResult:
    z: np.ndarray
    objective: float
    multipliers: np.ndarray
    gap: float
    kkt_residual: float
    newton_steps: int
    converged: bool


def _max_step(objective, A, slack, z, step):
    """Largest step keeping A z < b and the log arguments positive."""
    alpha = 1.0
    along = A @ step
    rising = along > 0.0
    if np.any(rising):
        alpha = min(alpha, 0.995 * float(np.min(slack[rising] / along[rising])))
    if objective.weights.size:
        args = objective.arguments(z)
        fall = objective.rows @ step
        shrinking = fall < 0.0
        if np.any(shrinking):
            alpha = min(alpha, 0.995 * float(np.min(args[shrinking]
                                                    / -fall[shrinking])))
    return alpha


def _newton_solve(hess: np.ndarray, grad: np.ndarray) -> np.ndarray:
    ridge = 0.0
    scale = max(np.trace(hess) / hess.shape[0], 1e-12)
    for _ in range(8):
        try:
            return np.linalg.solve(hess + ridge * np.eye(hess.shape[0]), -grad)
        except np.linalg.LinAlgError:
            ridge = max(ridge * 10.0, 1e-12 * scale)
    return np.linalg.lstsq(hess, -grad, rcond=None)[0]


def solve_barrier(objective: LogAffineObjective, A: np.ndarray, b: np.ndarray,
                  z0: np.ndarray, gap_tol: float = 1e-7,
                  kkt_tol: float = 5e-9, t0: float = 1.0, mu: float = 20.0,
                  max_stage_steps: int = 80) -> BarrierResult:
    """Barrier method with damped Newton centering.

    ``z0`` must be strictly feasible: ``A z0 < b`` and inside the
    objective's log domain.  Each stage minimizes f + Phi/t, whose
    gradient equals the KKT stationarity residual grad f + A' lambda for
    the stage multipliers lambda = 1/(t * slack); centering therefore
    stops on that residual directly.  Terminates when the duality gap
    m/t drops below ``gap_tol``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    z = np.array(z0, dtype=float)
    m = b.size
    if m == 0:
        raise ValueError("at least one linear constraint is required")
    if np.any(b - A @ z <= 0.0) or not objective.in_domain(z):
        raise ValueError("starting point is not strictly feasible")

    def merit(t, zz):
        return objective.value(zz) - float(np.sum(np.log(b - A @ zz))) / t

    t = t0
    steps = 0
    centered = False
    kkt = np.inf
    while True:
        centered = False
        best_z, best_kkt, stall = z.copy(), np.inf, 0
        for _ in range(max_stage_steps):
            slack = b - A @ z
            lam = 1.0 / (t * slack)
            g = objective.grad(z) + lam @ A
            kkt = float(np.max(np.abs(g)))
            if kkt < best_kkt:
                best_z, best_kkt, stall = z.copy(), kkt, 0
            else:
                stall += 1
            if kkt <= kkt_tol:
                centered = True
                break
            if stall >= 8:
                # rounding floor reached; keep the best point of the stage
                z = best_z
                centered = best_kkt <= max(kkt_tol, 1e-6)
                break
            h = objective.hess(z) + (A / slack[:, None]).T @ (A / slack[:, None]) / t
            step = _newton_solve(h, g)
            decrement = float(-g @ step)
            if decrement <= 0.0:
                z = best_z
                centered = best_kkt <= max(kkt_tol, 1e-6)
                break
            steps += 1
            # fraction-to-boundary cap keeps every trial strictly feasible
            alpha = _max_step(objective, A, slack, z, step)
            base = merit(t, z)
            while alpha > 1e-14:
                if merit(t, z + alpha * step) <= base - 0.01 * alpha * decrement:
                    break
                alpha *= 0.5
            if alpha <= 1e-14:
                z = best_z
                centered = best_kkt <= max(kkt_tol, 1e-6)
                break
            z = z + alpha * step
        else:
            z = best_z
            kkt = best_kkt
        if m / t <= gap_tol:
            break
        t = min(t * mu, m / gap_tol)    # land the last stage exactly on target

    slack = b - A @ z
    lam = 1.0 / (t * slack)
    kkt = float(np.max(np.abs(objective.grad(z) + lam @ A)))
    return BarrierResult(z=z, objective=objective.value(z), multipliers=lam,
                         gap=m / t, kkt_residual=kkt, newton_steps=steps,
                         converged=centered and m / t <= gap_tol)
