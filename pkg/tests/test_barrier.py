import numpy as np
import pytest

from nomapower.barrier import BarrierResult, LogAffineObjective, solve_barrier


def make_objective(weights, offsets, rows, linear):
    return LogAffineObjective(weights=np.asarray(weights, dtype=float),
                              offsets=np.asarray(offsets, dtype=float),
                              rows=np.asarray(rows, dtype=float),
                              linear=np.asarray(linear, dtype=float))


def test_log_pushes_to_upper_bound():
    # minimize -ln(z) subject to z <= 2: optimum at the bound
    obj = make_objective([1.0], [0.0], [[1.0]], [0.0])
    res = solve_barrier(obj, np.array([[1.0]]), np.array([2.0]), np.array([1.0]),
                        gap_tol=1e-9)
    assert res.converged
    assert res.z[0] == pytest.approx(2.0, abs=1e-8)
    assert res.kkt_residual <= 1e-6


def test_linear_objective_hits_lower_bound():
    # minimize z subject to 1 <= z <= 3
    obj = make_objective(np.empty(0), np.empty(0), np.empty((0, 1)), [1.0])
    A = np.array([[-1.0], [1.0]])
    b = np.array([-1.0, 3.0])
    res = solve_barrier(obj, A, b, np.array([2.0]), gap_tol=1e-9)
    assert res.z[0] == pytest.approx(1.0, abs=1e-8)


def test_interior_optimum():
    # minimize -ln(z1) - ln(z2) + z1 + z2 subject to z <= 10: optimum (1, 1)
    obj = make_objective([1.0, 1.0], [0.0, 0.0], np.eye(2), [1.0, 1.0])
    A = np.vstack([np.eye(2), -np.eye(2)])
    b = np.array([10.0, 10.0, 0.0, 0.0])
    res = solve_barrier(obj, A, b, np.array([3.0, 0.5]))
    assert res.z == pytest.approx([1.0, 1.0], abs=1e-7)
    assert res.kkt_residual <= 1e-6
    assert res.objective == pytest.approx(2.0, abs=1e-7)


def test_coupled_constraint():
    # maximize ln(z1) + ln(z2) on z1 + z2 <= 4 (and z >= 0): optimum (2, 2)
    obj = make_objective([1.0, 1.0], [0.0, 0.0], np.eye(2), [0.0, 0.0])
    A = np.vstack([np.ones((1, 2)), -np.eye(2)])
    b = np.array([4.0, 0.0, 0.0])
    res = solve_barrier(obj, A, b, np.array([1.0, 0.5]))
    assert res.z == pytest.approx([2.0, 2.0], abs=1e-7)


def test_rejects_infeasible_start():
    obj = make_objective([1.0], [0.0], [[1.0]], [0.0])
    with pytest.raises(ValueError, match="strictly feasible"):
        solve_barrier(obj, np.array([[1.0]]), np.array([2.0]), np.array([3.0]))
    with pytest.raises(ValueError, match="strictly feasible"):
        solve_barrier(obj, np.array([[1.0]]), np.array([2.0]), np.array([-1.0]))


def test_deterministic():
    obj = make_objective([1.0, 2.0], [0.1, 0.2], [[1.0, 0.3], [0.2, 1.0]],
                         [0.5, 0.1])
    A = np.vstack([np.eye(2), -np.eye(2)])
    b = np.array([5.0, 5.0, 0.0, 0.0])
    first = solve_barrier(obj, A, b, np.array([1.0, 1.0]))
    second = solve_barrier(obj, A, b, np.array([1.0, 1.0]))
    assert np.array_equal(first.z, second.z)
    assert first.objective == second.objective


def test_gap_reported():
    obj = make_objective([1.0], [0.0], [[1.0]], [0.0])
    res = solve_barrier(obj, np.array([[1.0]]), np.array([2.0]),
                        np.array([1.0]), gap_tol=1e-9)
    assert isinstance(res, BarrierResult)
    assert res.gap <= 1e-9
