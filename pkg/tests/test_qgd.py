import math

import numpy as np
import pytest

from qgdsim.errors import (
    DegenerateKernelError,
    InternalConsistencyError,
    PreconditionError,
    UnusableInitialStateError,
)
from qgdsim.lindblad import LindbladModel, build_gradient_operator, liouvillian_square, vectorize
from qgdsim.pauli import PauliSum, StateVector, expectation, to_dense
from qgdsim.qgd import (
    GradientOperator,
    IterationTrace,
    QgdConfig,
    TraceRow,
    error_bound,
    power_iteration_dense,
    qgd_run,
    qgd_step,
    spectral_summary,
)

from conftest import kron_dense, random_model, random_state

EPS = np.finfo(float).eps


def identity_D(n):
    return GradientOperator(PauliSum.identity(n))


def toy_problem(rng, n_sites=1, frac=0.9):
    m = random_model(rng, n_sites)
    liouv = vectorize(m)
    sq = liouvillian_square(liouv)
    lmax = np.linalg.eigvalsh(kron_dense(sq))[-1]
    return build_gradient_operator(liouv, frac / (2 * lmax)), sq, lmax


def test_step_identity(rng):
    v = random_state(rng, 2)
    out, c = qgd_step(identity_D(2), v)
    assert c == pytest.approx(1.0, abs=1e-14) and np.allclose(out.amplitudes, v.amplitudes, atol=1e-15)
    out, c = qgd_step(identity_D(2), v, 0.05)
    assert c == pytest.approx(1.05 ** 2, rel=1e-14)
    assert np.allclose(out.amplitudes, v.amplitudes, atol=1e-14)


def test_step_ising_matches_dense(ising2_D):
    v = StateVector.plus(4)
    out, c = qgd_step(ising2_D, v)
    w = kron_dense(ising2_D.d) @ v.amplitudes
    assert c == pytest.approx(np.vdot(w, w).real, rel=1e-12)
    assert np.max(np.abs(out.amplitudes - w / np.linalg.norm(w))) < 1e-12
    assert abs(np.linalg.norm(out.amplitudes) - 1) < 1e-12


def test_step_preconditions(ising2_D):
    with pytest.raises(PreconditionError):
        qgd_step(ising2_D, StateVector.plus(2))
    with pytest.raises(PreconditionError):
        qgd_step(identity_D(1), StateVector(np.array([1.0, 1.0])))
    proj = GradientOperator(PauliSum(1, {"I": 0.5, "Z": 0.5}))
    with pytest.raises(DegenerateKernelError):
        qgd_step(proj, StateVector.basis("1"))


def test_gradient_operator_rejects_bad_input():
    with pytest.raises(InternalConsistencyError):
        GradientOperator(PauliSum(1, {"X": 1j}))
    with pytest.raises(PreconditionError):
        GradientOperator.from_generator(PauliSum.identity(1), -0.1)


def test_config_validation():
    for kw in ({"max_iters": 0}, {"tolerance": 0}, {"noise_v0": -1}, {"divergence_factor": 1},
               {"rng_seed": -1}):
        with pytest.raises(PreconditionError):
            QgdConfig(**kw)


def test_run_identity_keeps_objective():
    obj = PauliSum(1, {"Z": 1.0, "X": 0.3}).as_hermitian()
    init = StateVector.plus(1)
    run = qgd_run(identity_D(1), obj, init, QgdConfig(max_iters=25, early_stop=False))
    assert len(run.trace) == 25
    assert np.allclose(run.trace.objectives, expectation(obj, init).real, atol=1e-15)
    assert np.allclose(run.trace.column("norm_constant"), 1.0, atol=1e-14)


def test_run_trajectory_matches_power_iteration(rng):
    D, sq, _ = toy_problem(rng)
    init = StateVector.plus(2)
    run = qgd_run(D, sq, init, QgdConfig(max_iters=40, early_stop=False))
    dense = kron_dense(D.d)
    v = init.amplitudes.copy()
    for row in run.trace:
        v = dense @ v
        v /= np.linalg.norm(v)
        assert row.objective == pytest.approx(np.vdot(v, kron_dense(sq) @ v).real, abs=1e-10)
    assert np.max(np.abs(run.final_state.amplitudes - v)) < 1e-10


def test_power_iteration_equivalence_random(rng):
    worst = 0.0
    for k in range(12):
        D, sq, _ = toy_problem(rng, 1 + k % 2, frac=rng.uniform(0.2, 1.8))
        init = random_state(rng, D.n_qubits)
        S = int(rng.integers(1, 101))
        run = qgd_run(D, sq, init, QgdConfig(max_iters=S, early_stop=False, stop_on_divergence=False))
        ref = power_iteration_dense(D, init, S)
        worst = max(worst, np.max(np.abs(run.final_state.amplitudes - ref)))
    assert worst < 1e-9


def test_monotone_objective_in_provable_range(rng, ising2):
    models = [ising2] + [random_model(rng, 1 + k % 2) for k in range(20)]
    for m in models:
        liouv = vectorize(m)
        sq = liouvillian_square(liouv)
        lmax = np.linalg.eigvalsh(kron_dense(sq))[-1]
        D = build_gradient_operator(liouv, 0.49 / lmax)
        run = qgd_run(D, sq, StateVector.plus(2 * m.n_sites), QgdConfig(max_iters=200, early_stop=False))
        f = np.r_[run.initial_objective, run.trace.objectives]
        assert np.all(np.diff(f) <= 1e-12)


def test_monotonicity_can_fail_above_half_inverse_lambda_max():
    # counterexample recorded for the looser range gamma < 1/lambda_max
    rng = np.random.default_rng(3)
    rises = 0
    for k in range(20):
        m = random_model(rng, 1 + k % 2)
        liouv = vectorize(m)
        sq = liouvillian_square(liouv)
        lmax = np.linalg.eigvalsh(kron_dense(sq))[-1]
        D = build_gradient_operator(liouv, 0.99 / lmax)
        run = qgd_run(D, sq, StateVector.plus(2 * m.n_sites), QgdConfig(max_iters=300, early_stop=False))
        f = np.r_[run.initial_objective, run.trace.objectives]
        rises += bool(np.max(np.diff(f)) > 1e-12)
    assert rises > 0


def test_early_stop_and_converged_invariant(rng):
    D, sq, _ = toy_problem(rng)
    run = qgd_run(D, sq, StateVector.plus(2), QgdConfig(max_iters=5000, tolerance=1e-6))
    assert run.converged and abs(run.final_objective) <= 1e-6
    assert run.iterations_used == len(run.trace) < 5000
    short = qgd_run(D, sq, StateVector.plus(2), QgdConfig(max_iters=1, tolerance=1e-12))
    assert not short.converged and short.iterations_used == 1


def test_initial_state_already_converged():
    obj = PauliSum(1, {"I": 0.5, "Z": -0.5}).as_hermitian()
    run = qgd_run(identity_D(1), obj, StateVector.basis("0"))
    assert run.converged and run.iterations_used == 0 and len(run.trace) == 0


def test_noise_column_follows_seeded_normals(ising2_D, ising2_liouv):
    sq = liouvillian_square(ising2_liouv)
    cfg = QgdConfig(max_iters=30, early_stop=False, noise_v0=0.05, rng_seed=11,
                    stop_on_divergence=False)
    run = qgd_run(ising2_D, sq, StateVector.plus(4), cfg)
    expected = 0.05 * np.random.default_rng(11).standard_normal(30)
    assert np.array_equal(run.trace.column("noise_sample"), expected)
    quiet = qgd_run(ising2_D, sq, StateVector.plus(4), QgdConfig(max_iters=3, early_stop=False))
    assert all(r.noise_sample is None for r in quiet.trace)


def test_determinism(ising2_D, ising2_liouv):
    sq = liouvillian_square(ising2_liouv)
    cfg = QgdConfig(max_iters=50, early_stop=False, noise_v0=0.1, rng_seed=4)
    a = qgd_run(ising2_D, sq, StateVector.plus(4), cfg).trace.to_csv()
    b = qgd_run(ising2_D, sq, StateVector.plus(4), cfg).trace.to_csv()
    c = qgd_run(ising2_D, sq, StateVector.plus(4), QgdConfig(max_iters=50, early_stop=False,
                                                             noise_v0=0.1, rng_seed=5)).trace.to_csv()
    assert a == b and a != c


def test_divergence_is_flagged_not_raised(ising2_liouv):
    sq = liouvillian_square(ising2_liouv)
    D = build_gradient_operator(ising2_liouv, 2.0)
    run = qgd_run(D, sq, StateVector.plus(4), QgdConfig(max_iters=500))
    assert run.diverged and not run.converged
    assert run.divergence_step == run.iterations_used < 500
    keep = qgd_run(D, sq, StateVector.plus(4), QgdConfig(max_iters=500, stop_on_divergence=False,
                                                         early_stop=False))
    assert keep.diverged and keep.iterations_used == 500


def test_fidelity_column(ising2_D, ising2_liouv):
    sq = liouvillian_square(ising2_liouv)
    init = StateVector.plus(4)
    run = qgd_run(ising2_D, sq, init, QgdConfig(max_iters=3, early_stop=False), reference=init)
    assert 0 < run.trace.rows[0].fidelity <= 1
    with pytest.raises(PreconditionError):
        qgd_run(ising2_D, sq, init, reference=StateVector.plus(2))


def test_csv_format_and_round_trip(ising2_D, ising2_liouv):
    sq = liouvillian_square(ising2_liouv)
    run = qgd_run(ising2_D, sq, StateVector.plus(4), QgdConfig(max_iters=4, early_stop=False))
    text = run.trace.to_csv()
    lines = text.splitlines()
    assert lines[0] == "s,objective,norm_constant,fidelity,noise_sample"
    assert lines[1].startswith("1,") and lines[1].endswith(",,")
    back = IterationTrace.from_csv(text)
    assert back.rows == run.trace.rows
    assert back.to_csv() == text


def test_trace_rejects_disorder():
    t = IterationTrace()
    t.append(TraceRow(1, 0.5, 1.0))
    with pytest.raises(InternalConsistencyError):
        t.append(TraceRow(1, 0.4, 1.0))
    with pytest.raises(InternalConsistencyError):
        t.append(TraceRow(2, 0.4, 0.0))
    with pytest.raises(ValueError):
        IterationTrace.from_csv("a,b\n1,2\n")


def test_spectral_summary_zero_liouvillian():
    liouv = vectorize(LindbladModel.zero(1))
    D = build_gradient_operator(liouv, 0.3)
    summ = spectral_summary(D, liouvillian_square(liouv), StateVector.plus(2))
    assert np.allclose(summ.d_eigenvalues, 1.0) and summ.degenerate_dominant


def test_spectral_summary_ising(ising2_D, ising2_liouv):
    sq = liouvillian_square(ising2_liouv)
    summ = spectral_summary(ising2_D, sq, StateVector.plus(4))
    assert abs(summ.lambda1) < 1e-10
    lam = (1 - summ.d_eigenvalues) / (2 * 0.5)
    assert np.max(np.abs(np.sort(lam) - summ.generator_eigenvalues)) < 1e-10
    assert summ.lambda_max == pytest.approx(4.2992, abs=1e-4)  # frozen from the dense oracle
    assert summ.delta1 >= summ.delta2 and not summ.degenerate_dominant
    assert summ.gap == pytest.approx(summ.lambda_max - summ.lambda1)


def test_spectral_summary_consistency_check(ising2_D, ising2_liouv):
    wrong = 2.0 * liouvillian_square(ising2_liouv)
    with pytest.raises(InternalConsistencyError):
        spectral_summary(ising2_D, wrong, StateVector.plus(4))


def test_error_bound_trivial_cases(rng):
    D, sq, _ = toy_problem(rng)
    top = spectral_summary(D, sq, StateVector.plus(2))
    exact = spectral_summary(D, sq, StateVector(top.dominant_vector))
    assert all(error_bound(exact, S) == pytest.approx(0, abs=1e-12) for S in (1, 10, 100))
    bounds = [error_bound(top, S) for S in range(1, 30)]
    assert all(b1 > b2 for b1, b2 in zip(bounds, bounds[1:]))


def test_error_bound_orthogonal_init_raises(rng):
    D, sq, _ = toy_problem(rng)
    top = spectral_summary(D, sq, StateVector.plus(2)).dominant_vector
    # any vector orthogonal to the dominant eigenvector
    w = np.array([1, 2, 3, 4], dtype=complex)
    w = w - np.vdot(top, w) * top
    summ = spectral_summary(D, sq, StateVector(w / np.linalg.norm(w)))
    assert summ.tau1_sq < 1e-28
    from dataclasses import replace
    with pytest.raises(UnusableInitialStateError):
        error_bound(replace(summ, tau1_sq=0.0), 5)


def test_error_bound_holds_on_random_models(rng):
    violations = 0
    for _ in range(10):
        D, sq, lmax = toy_problem(rng)
        init = StateVector.plus(2)
        summ = spectral_summary(D, sq, init)
        run = qgd_run(D, sq, init, QgdConfig(max_iters=200, early_stop=False))
        floor = 64 * EPS * lmax
        for S, f in enumerate(run.trace.objectives, 1):
            violations += abs(f - summ.lambda1) > error_bound(summ, S) + floor
    assert violations == 0


def test_norm_constant_product_tracks_unnormalized_objective(rng):
    D, sq, _ = toy_problem(rng)
    init = StateVector.plus(2)
    run = qgd_run(D, sq, init, QgdConfig(max_iters=15, early_stop=False))
    w = np.linalg.matrix_power(to_dense(D.d), 15) @ init.amplitudes
    prod = math.prod(run.trace.column("norm_constant"))
    assert prod == pytest.approx(np.vdot(w, w).real, rel=1e-10)
