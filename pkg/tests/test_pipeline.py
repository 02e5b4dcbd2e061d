"""Pipelined executor: dependency graph, schedule counts, bit-identity."""

import queue
import threading

import numpy as np
import pytest

from hbpc.pipeline import (Block, DeadlockError, WorkerAssignment, _chan_get,
                           dependencies, integrate_parallel, simulate_schedule)
from hbpc.problems import scalar_pow, van_der_pol
from hbpc.solver import SolverConfig, integrate


def test_dependencies_predictor():
    assert dependencies(Block(0, 0), "Alg1", 3) == set()
    assert dependencies(Block(4, 0), "Alg1", 3) == {Block(3, 0)}
    assert dependencies(Block(4, 0), "Alg2", 3) == {Block(3, 1)}
    assert dependencies(Block(4, 0), "LO", 3) == {Block(3, 0)}


def test_dependencies_corrections():
    # hierarchical red: one iterate above, clamped at kmax
    assert dependencies(Block(4, 1), "Alg1", 3) == {Block(4, 0), Block(3, 2)}
    assert dependencies(Block(4, 3), "Alg1", 3) == {Block(4, 2), Block(3, 3)}
    assert dependencies(Block(0, 2), "Alg1", 3) == {Block(0, 1)}
    # LO red: the same lane one step back
    assert dependencies(Block(4, 2), "LO", 3) == {Block(4, 1), Block(3, 2)}


def test_worker_assignment_shapes():
    asg = WorkerAssignment(variant="Alg1", kmax=7)
    assert asg.n_workers == 4
    assert asg.iterates(0) == [0, 1]
    assert asg.iterates(3) == [6, 7]
    assert [asg.owner(k) for k in range(8)] == [0, 0, 1, 1, 2, 2, 3, 3]

    lo = WorkerAssignment(variant="LO", kmax=4)
    assert lo.n_workers == 5
    assert lo.iterates(2) == [2]
    assert lo.owner(3) == 3

    ser = WorkerAssignment(variant="serial", kmax=5)
    assert ser.n_workers == 1
    assert ser.iterates(0) == list(range(6))


def test_worker_assignment_rejects_even_kmax_for_pairs():
    with pytest.raises(ValueError):
        WorkerAssignment(variant="Alg1", kmax=4)
    with pytest.raises(ValueError):
        WorkerAssignment(variant="Alg2", kmax=2)
    WorkerAssignment(variant="LO", kmax=4)  # fine: one worker per lane


def test_schedule_cycle_counts():
    for kmax in (1, 3, 5, 7):
        for N in (1, 2, 5, 12):
            assert simulate_schedule("Alg1", kmax, N) == 2 * N + kmax - 1
            assert simulate_schedule("Alg2", kmax, N) == 2 * N + kmax - 1
            assert simulate_schedule("serial", kmax, N) == N * (kmax + 1)
    for kmax in (1, 2, 3, 6):
        for N in (1, 4, 9):
            assert simulate_schedule("LO", kmax, N) == N + kmax
    assert simulate_schedule("Alg1", 1, 10) == 20  # one pair pipelines nothing


def test_schedule_validation():
    with pytest.raises(ValueError):
        simulate_schedule("Alg1", 0, 5)
    with pytest.raises(ValueError):
        simulate_schedule("Alg1", 3, 0)
    with pytest.raises(ValueError):
        simulate_schedule("Alg1", 4, 5)  # even kmax has no pairing


@pytest.mark.parametrize("variant,kmax", [("Alg1", 3), ("Alg2", 3),
                                          ("Alg1", 1), ("LO", 2), ("LO", 4)])
def test_parallel_matches_serial_bitwise(variant, kmax):
    p = scalar_pow()
    cfg = SolverConfig(variant=variant, q=4, kmax=kmax, n_steps=20)
    ser = integrate(p, cfg)
    par = integrate_parallel(p, cfg)
    assert np.array_equal(ser.updates, par.updates)
    assert np.array_equal(ser.errors, par.errors)
    assert np.array_equal(ser.newton_per_iterate, par.newton_per_iterate)
    for a, b in zip(ser.final_last_w, par.final_last_w):
        assert np.array_equal(a, b)


def test_parallel_bitwise_on_a_stiff_problem():
    p = van_der_pol(eps=0.1)
    cfg = SolverConfig(variant="Alg1", q=6, kmax=3, n_steps=25)
    assert np.array_equal(integrate(p, cfg).updates,
                          integrate_parallel(p, cfg).updates)


def test_worker_count_is_checked():
    p = scalar_pow()
    cfg = SolverConfig(variant="Alg1", q=4, kmax=3, n_steps=4)
    integrate_parallel(p, cfg, workers=2)
    with pytest.raises(ValueError):
        integrate_parallel(p, cfg, workers=3)
    with pytest.raises(ValueError):
        integrate_parallel(p, SolverConfig(variant="Limit", n_steps=4))


def test_channel_log_discipline():
    p = scalar_pow()
    n_steps = 6
    log = {}
    integrate_parallel(p, SolverConfig(variant="Alg1", q=4, kmax=3,
                                       n_steps=n_steps), channel_log=log)
    assert set(log) == {"up0", "down0"}
    assert log["up0"] == list(range(n_steps))
    assert log["down0"] == list(range(n_steps))

    log = {}
    integrate_parallel(p, SolverConfig(variant="LO", q=4, kmax=2,
                                       n_steps=n_steps), channel_log=log)
    assert set(log) == {"up0", "up1"}
    assert all(v == list(range(n_steps)) for v in log.values())


def test_channel_get_starvation_raises():
    empty = queue.Queue()
    with pytest.raises(DeadlockError):
        _chan_get(empty, threading.Event(), 0.1, "up0")
