import math

import numpy as np
import pytest

from qgdsim.baselines import (
    BaselineTrace,
    DvqeParams,
    compare_convergence,
    dvqe_ansatz_state,
    dvqe_loss,
    dvqe_unitary,
    finite_difference_gradient,
    first_step_below,
    train_vqe,
    variational_train,
)
from qgdsim.errors import DimensionError, NonFiniteLossError, PreconditionError
from qgdsim.lindblad import liouvillian_square
from qgdsim.linsys import reference_system, solve_system
from qgdsim.pauli import StateVector
from qgdsim.qgd import CSV_COLUMNS, QgdConfig

from conftest import X, Z, random_state


def ry_m(t):
    return np.array([[math.cos(t / 2), -math.sin(t / 2)], [math.sin(t / 2), math.cos(t / 2)]])


def rx_m(t):
    return np.array([[math.cos(t / 2), -1j * math.sin(t / 2)], [-1j * math.sin(t / 2), math.cos(t / 2)]])


def ctrl(u):
    return np.block([[np.eye(2), np.zeros((2, 2))], [np.zeros((2, 2)), u]])


def cnot_4q(c, t):
    """Permutation matrix of CNOT on 4 qubits, qubit 0 most significant."""
    m = np.zeros((16, 16))
    for i in range(16):
        bits = [(i >> (3 - q)) & 1 for q in range(4)]
        if bits[c]:
            bits[t] ^= 1
        j = sum(b << (3 - q) for q, b in enumerate(bits))
        m[j, i] = 1
    return m


def oracle_unitary(a, b):
    u = np.kron(ry_m(a[0]), ry_m(a[1])) @ ctrl(ry_m(a[2])) @ np.kron(ry_m(a[3]), ry_m(a[4])) @ ctrl(ry_m(a[5]))

    def v(sign):
        lay = [np.kron(ry_m(b[i]) @ rx_m(sign * b[i + 1]), ry_m(b[i + 2]) @ rx_m(sign * b[i + 3]))
               for i in (0, 4, 8)]
        return lay[0] @ ctrl(Z) @ lay[1] @ ctrl(Z) @ lay[2]

    return np.kron(v(1), v(-1)) @ cnot_4q(1, 3) @ cnot_4q(0, 2) @ np.kron(u, np.eye(4))


def test_parameter_count():
    p = DvqeParams((0,) * 6, (0,) * 12)
    assert p.n_params == 18 == 6 + 12
    with pytest.raises(DimensionError):
        DvqeParams((0,) * 5, (0,) * 12)
    with pytest.raises(DimensionError):
        DvqeParams.from_vector(np.zeros(17))
    assert np.array_equal(DvqeParams.from_vector(np.arange(18.0)).vector, np.arange(18.0))


def test_zero_parameters_give_cnot_pattern(rng):
    init = random_state(rng, 4)
    out = dvqe_ansatz_state(DvqeParams.from_vector(np.zeros(18)), init)
    expected = cnot_4q(1, 3) @ cnot_4q(0, 2) @ init.amplitudes
    assert np.max(np.abs(out.amplitudes - expected)) < 1e-15
    plus_out = dvqe_ansatz_state(DvqeParams.from_vector(np.zeros(18)), StateVector.plus(4))
    assert np.allclose(plus_out.amplitudes, 0.25)


def test_ansatz_matches_oracle(rng):
    worst = 0.0
    init = StateVector.plus(4)
    for _ in range(100):
        vec = rng.uniform(-np.pi, np.pi, 18)
        p = DvqeParams.from_vector(vec)
        gate_by_gate = dvqe_ansatz_state(p, init).amplitudes
        oracle = oracle_unitary(vec[:6], vec[6:]) @ init.amplitudes
        worst = max(worst, np.max(np.abs(gate_by_gate - oracle)),
                    np.max(np.abs(dvqe_unitary(p) @ init.amplitudes - oracle)))
        assert abs(np.linalg.norm(gate_by_gate) - 1) < 1e-12
    assert worst < 1e-12
    with pytest.raises(DimensionError):
        dvqe_ansatz_state(p, StateVector.plus(2))


def test_conjugate_block(rng):
    from qgdsim.baselines import _v_matrix

    b = rng.uniform(-np.pi, np.pi, 12)
    assert np.max(np.abs(_v_matrix(b, -1.0) - _v_matrix(b).conj())) < 1e-14


def test_fd_gradient_examples(rng):
    a = rng.normal(size=5)
    assert np.allclose(finite_difference_gradient(lambda p: float(p @ p), a, 1e-3), 2 * a, atol=1e-10)
    assert np.array_equal(finite_difference_gradient(lambda p: 3.0, a), np.zeros(5))
    with pytest.raises(PreconditionError):
        finite_difference_gradient(lambda p: 0.0, a, 0.0)


def test_fd_gradient_rotation_loss():
    def loss(p):
        v = ry_m(p[0]) @ np.array([1.0, 0.0])
        return float((v @ X @ v).real)  # sin t

    for h in (1e-2, 1e-3):
        err = abs(finite_difference_gradient(loss, [0.3], h)[0] - math.cos(0.3))
        assert err <= math.cos(0.3) * h * h / 6 * 1.01


def test_train_flat_at_stationary_point():
    tr = variational_train(lambda p: float(p @ p), np.zeros(3), 0.1, 10)
    assert tr.losses == [0.0] * 10 and tr.initial_loss == 0.0


def test_train_monotone_on_convex_quadratic(rng):
    h = rng.normal(size=(4, 4))
    h = h @ h.T + np.eye(4)
    eta = 0.9 / np.linalg.eigvalsh(2 * h)[-1]
    tr = variational_train(lambda p: float(p @ h @ p), rng.normal(size=4), eta, 100)
    f = [tr.initial_loss] + tr.losses
    assert all(a >= b for a, b in zip(f, f[1:]))


def test_train_determinism_and_errors():
    loss = lambda p: float(np.sum(np.cos(p)))  # noqa: E731
    a = variational_train(loss, None, 0.1, 20, seed=5, n_params=3)
    b = variational_train(loss, None, 0.1, 20, seed=5, n_params=3)
    assert a.losses == b.losses and a.to_csv() == b.to_csv()
    with pytest.raises(PreconditionError):
        variational_train(loss, None, 0.1, 5)
    with pytest.raises(PreconditionError):
        variational_train(loss, np.zeros(2), 0.0, 5)
    with pytest.raises(NonFiniteLossError):
        variational_train(lambda p: float("nan"), np.zeros(2), 0.1, 5)
    with pytest.raises(NonFiniteLossError):
        # eta = 10 overshoots the quadratic; the loss is capped to inf past 1e3
        variational_train(lambda p: float(p @ p) if abs(p[0]) < 1e3 else math.inf, np.ones(2), 10.0, 20)


def test_trace_csv_schema():
    tr = BaselineTrace()
    tr.append(1, 0.5)
    tr.append(2, 0.25)
    lines = tr.to_csv().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[2] == "2,0.25,,,"
    assert tr.min_loss == 0.25 and tr.argmin_step == 2
    with pytest.raises(PreconditionError):
        tr.append(2, 0.1)


def test_dvqe_short_run_decreases(ising2_liouv):
    sq = liouvillian_square(ising2_liouv)
    loss = dvqe_loss(sq, StateVector.plus(4))
    tr = variational_train(loss, None, 0.2, 40, seed=0, n_params=18)
    assert tr.losses[-1] < tr.initial_loss
    assert tr.best_params.shape == (18,)
    with pytest.raises(DimensionError):
        dvqe_loss(sq.tensor(sq), StateVector.plus(8))


def test_vqe_slower_than_qgd_on_linear_system():
    sys = reference_system()
    h = sys.hamiltonian()
    rep = solve_system(h, 0.3, QgdConfig(max_iters=100, tolerance=1e-3), init=StateVector.plus(4))
    vqe = train_vqe(h, steps=100, seed=0)
    q_step = first_step_below(rep.run.trace.objectives, 1e-3)
    v_step = first_step_below(vqe.losses, 1e-3, vqe.steps)
    assert q_step is not None
    assert v_step is None or v_step > q_step


def test_compare_convergence_helper():
    from qgdsim.qgd import IterationTrace, TraceRow

    q = IterationTrace()
    for s in range(1, 31):
        q.append(TraceRow(s, 1.0 / s, 1.0))
    b = BaselineTrace()
    for s in range(1, 31):
        b.append(s, 0.5 if s != 25 else 0.01)
    out = compare_convergence(q, b, start=20)
    assert out["compared_steps"] == 11 and out["first_violation"] == 25
    assert out["qgd_not_better_steps"] == 1 and out["baseline_min"] == 0.01
    assert first_step_below([3, 2, 1], 2) == 2 and first_step_below([3], 1) is None
