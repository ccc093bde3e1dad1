"""Downlink multi-cell NOMA system model.

Topology, channel data, effective interference, achievable rates and
rate-demand checks.  Conventions used throughout the package:

* channel gains are linear power gains (|h|^2); dB quantities are
  converted before construction,
* users inside a (cell, subchannel) group are sorted by own-cell gain,
  ascending, so index 0 is the weakest user and index -1 the strongest,
* ``q`` is always an (I, M) array of per-BS per-subchannel total powers
  in watts.

All containers are immutable after construction; every operation here is
a pure function, safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LN2 = np.log(2.0)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(np.asarray(a, dtype=float))
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class NetworkTopology:
    """Static description of the network.

    ``gains[i][m]`` is an (I, n) array for the group served by BS ``i`` on
    subchannel ``m`` with ``n`` users: entry ``[k, j]`` is the linear power
    gain from BS ``k`` to user ``j`` of that group.  Row ``i`` holds the
    own-cell gains and is non-decreasing (users sorted at construction).

    ``user_ids[i][m]`` carries the caller's user identifiers in the sorted
    order, for traceability.
    """

    bandwidth: float
    noise_power: float
    budgets: np.ndarray
    gains: tuple
    user_ids: tuple = field(default=None)

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if self.noise_power <= 0:
            raise ValueError("noise power must be positive")
        budgets = _freeze(self.budgets)
        if budgets.ndim != 1 or np.any(budgets <= 0):
            raise ValueError("budgets must be a 1-D positive array")
        num_cells = budgets.size

        sorted_gains = []
        sorted_ids = []
        next_id = 0
        seen = set()
        for i, per_cell in enumerate(self.gains):
            if len(per_cell) != len(self.gains[0]):
                raise ValueError("every cell must cover the same subchannels")
            row_gains = []
            row_ids = []
            for m, g in enumerate(per_cell):
                g = np.asarray(g, dtype=float)
                if g.ndim != 2 or g.shape[0] != num_cells:
                    raise ValueError(
                        f"group ({i},{m}): gains must be (num_cells, n_users)")
                if np.any(g[i] <= 0):
                    raise ValueError(f"group ({i},{m}): own gains must be > 0")
                if np.any(g < 0):
                    raise ValueError(f"group ({i},{m}): gains must be >= 0")
                if self.user_ids is not None:
                    ids = np.asarray(self.user_ids[i][m])
                else:
                    ids = np.arange(next_id, next_id + g.shape[1])
                    next_id += g.shape[1]
                if ids.size != g.shape[1]:
                    raise ValueError(f"group ({i},{m}): user id count mismatch")
                for u in ids.tolist():
                    if u in seen:
                        raise ValueError(f"user {u} appears in two groups")
                    seen.add(u)
                # ascending own gain; ties keep the original user order
                order = np.argsort(g[i], kind="stable")
                row_gains.append(_freeze(g[:, order]))
                row_ids.append(_freeze(ids[order]).astype(int))
            sorted_gains.append(tuple(row_gains))
            sorted_ids.append(tuple(row_ids))

        object.__setattr__(self, "budgets", budgets)
        object.__setattr__(self, "gains", tuple(sorted_gains))
        object.__setattr__(self, "user_ids", tuple(sorted_ids))

    @property
    def num_cells(self) -> int:
        return self.budgets.size

    @property
    def num_subchannels(self) -> int:
        return len(self.gains[0])

    def group_size(self, i: int, m: int) -> int:
        return self.gains[i][m].shape[1]

    def own_gains(self, i: int, m: int) -> np.ndarray:
        return self.gains[i][m][i]

    def groups(self):
        """Iterate over all (cell, subchannel) pairs."""
        for i in range(self.num_cells):
            for m in range(self.num_subchannels):
                yield i, m


@dataclass(frozen=True)
class RateDemands:
    """Minimum rate demand (bit/s) per user, aligned with topology order."""

    rates: tuple

    def __post_init__(self):
        frozen = tuple(
            tuple(_freeze(r) for r in per_cell) for per_cell in self.rates)
        for per_cell in frozen:
            for r in per_cell:
                if np.any(r <= 0):
                    raise ValueError("rate demands must be positive")
        object.__setattr__(self, "rates", frozen)

    @classmethod
    def uniform(cls, topology: NetworkTopology, rate: float) -> "RateDemands":
        return cls(tuple(
            tuple(np.full(topology.group_size(i, m), float(rate))
                  for m in range(topology.num_subchannels))
            for i in range(topology.num_cells)))

    @classmethod
    def by_user(cls, topology: NetworkTopology, table: dict) -> "RateDemands":
        """Build from a {user_id: rate} mapping covering every user."""
        return cls(tuple(
            tuple(np.array([table[u] for u in topology.user_ids[i][m]], dtype=float)
                  for m in range(topology.num_subchannels))
            for i in range(topology.num_cells)))


@dataclass(frozen=True)
class PowerAllocation:
    """Per-user transmit powers (W), aligned with topology order."""

    powers: tuple

    def __post_init__(self):
        object.__setattr__(self, "powers", tuple(
            tuple(_freeze(p) for p in per_cell) for per_cell in self.powers))

    def cell_powers(self) -> np.ndarray:
        """Group totals as an (I, M) array."""
        return np.array([[p.sum() for p in per_cell] for per_cell in self.powers])

    def consistent_with(self, q: np.ndarray, rtol: float = 1e-9) -> bool:
        totals = self.cell_powers()
        return bool(np.all(np.abs(totals - q) <= rtol * np.maximum(np.abs(q), 1e-300)))


def interference_noise_ratio(topology: NetworkTopology, q: np.ndarray,
                             i: int, m: int) -> np.ndarray:
    """(inter-cell interference + noise) / own gain, per user of group (i, m)."""
    g = topology.gains[i][m]
    q = np.asarray(q, dtype=float)
    other = np.delete(np.arange(topology.num_cells), i)
    z = q[other, m] @ g[other] + topology.noise_power
    return z / g[i]


def effective_interference(topology: NetworkTopology, q: np.ndarray,
                           i: int, m: int, j: int | None = None):
    """Worst-case normalized interference-plus-noise for SIC decoding.

    For user ``j`` this is the maximum, over users ``l >= j`` that must
    decode ``j``'s message, of (inter-cell interference at ``l`` + noise)
    divided by ``l``'s own gain.  Returns the whole group as an array when
    ``j`` is None.
    """
    ratio = interference_noise_ratio(topology, q, i, m)
    h = np.maximum.accumulate(ratio[::-1])[::-1]
    return h if j is None else h[j]


def achievable_rate(topology: NetworkTopology, allocation: PowerAllocation,
                    q: np.ndarray, i: int, m: int, j: int | None = None):
    """Achievable rate (bit/s) of group (i, m) users under SIC decoding."""
    p = allocation.powers[i][m]
    h = effective_interference(topology, q, i, m)
    rates = group_rates(p, h, topology.bandwidth)
    return rates if j is None else rates[j]


def group_rates(p: np.ndarray, h: np.ndarray, bandwidth: float) -> np.ndarray:
    """Rates for one group given its powers and effective interference."""
    p = np.asarray(p, dtype=float)
    tail = suffix_sums(p)
    return bandwidth * np.log1p(p / (tail + h)) / LN2


def suffix_sums(p: np.ndarray) -> np.ndarray:
    """suffix_sums(p)[j] = sum of p[j+1:]."""
    out = np.zeros_like(p, dtype=float)
    if p.size > 1:
        out[:-1] = np.cumsum(p[::-1])[::-1][1:]
    return out


def rate_via_decoding_chain(topology: NetworkTopology, allocation: PowerAllocation,
                            q: np.ndarray, i: int, m: int) -> np.ndarray:
    """Rates as the explicit minimum over decoding users l >= j.

    Algebraically identical to :func:`achievable_rate`; kept as an
    independent evaluation path for validation.
    """
    p = allocation.powers[i][m]
    ratio = interference_noise_ratio(topology, q, i, m)
    tail = suffix_sums(p)
    b = topology.bandwidth
    n = p.size
    rates = np.empty(n)
    for j in range(n):
        rates[j] = min(
            b * np.log1p(p[j] / (tail[j] + ratio[l])) / LN2 for l in range(j, n))
    return rates


def rate_constraint_slack(p: np.ndarray, h: np.ndarray, demands: np.ndarray,
                          bandwidth: float) -> np.ndarray:
    """Signed slack (W) of the linearized rate constraint for one group.

    Positive where p_j >= (2^(R_j/B) - 1) * (sum of later powers + H_j).
    """
    growth = np.exp2(np.asarray(demands, dtype=float) / bandwidth) - 1.0
    return np.asarray(p, dtype=float) - growth * (suffix_sums(np.asarray(p, dtype=float)) + h)


def check_rate_constraints(topology: NetworkTopology, allocation: PowerAllocation,
                           q: np.ndarray, demands: RateDemands):
    """Per-user demand check across the network.

    Returns (satisfied, slack) with the same nested (cell, subchannel)
    layout as the allocation; slack is in watts.
    """
    satisfied = []
    slack = []
    for i in range(topology.num_cells):
        ok_row, sl_row = [], []
        for m in range(topology.num_subchannels):
            h = effective_interference(topology, q, i, m)
            s = rate_constraint_slack(allocation.powers[i][m], h,
                                      demands.rates[i][m], topology.bandwidth)
            sl_row.append(s)
            ok_row.append(s >= -1e-12 * np.maximum(np.abs(allocation.powers[i][m]), 1.0))
        satisfied.append(tuple(ok_row))
        slack.append(tuple(sl_row))
    return tuple(satisfied), tuple(slack)
