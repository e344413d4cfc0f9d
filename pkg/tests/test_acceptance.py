"""Exit criteria of the build, one test each.

Every test records a PASS/FAIL line (printed in the pytest terminal summary,
or directly with ``python3 tests/test_acceptance.py``) and then asserts.
"""

import functools
import math
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import kron_dense, random_hermitian_sum, random_model, random_state, record_acceptance  # noqa: E402

from qgdsim.baselines import train_dvqe  # noqa: E402
from qgdsim.cli import run_experiment  # noqa: E402
from qgdsim.config import PRESETS  # noqa: E402
from qgdsim.estimation import hadamard_test, sample_plan, strategy1_expectation, strategy2_expectation  # noqa: E402
from qgdsim.lcu import lcu_block, run_algorithm, success_probability  # noqa: E402
from qgdsim.lindblad import (  # noqa: E402
    build_gradient_operator,
    dense_liouvillian_oracle,
    ising_model,
    liouvillian_square,
    vectorize,
)
from qgdsim.linsys import reference_system, solve_system  # noqa: E402
from qgdsim.ness import max_entangled_state, observable_expectation, solve_ness  # noqa: E402
from qgdsim.pauli import PauliSum, StateVector, to_dense  # noqa: E402
from qgdsim.qgd import GradientOperator, QgdConfig, error_bound, qgd_run, qgd_step, spectral_summary  # noqa: E402

pytestmark = pytest.mark.acceptance

EPS = np.finfo(float).eps
FIG3_INIT = StateVector.plus(4)


def ising2():
    return ising_model(2, 1.0, 1.0, [0.1, 0.1])


def fig3_run(gamma, v0=0.0, seed=0, iters=500):
    """Full-length run: no early stop, divergence only flagged."""
    cfg = QgdConfig(max_iters=iters, tolerance=1e-2, noise_v0=v0, rng_seed=seed,
                    early_stop=False, stop_on_divergence=False)
    return solve_ness(ising2(), gamma, cfg)


@functools.lru_cache(maxsize=None)
def dvqe_trace():
    sq = liouvillian_square(vectorize(ising2())).as_hermitian()
    return train_dvqe(sq, FIG3_INIT, eta=0.2, steps=500, seed=0)


def check(number, title, passed, detail):
    record_acceptance(number, title, passed, detail)
    assert passed, detail


def test_01_ising_ideal_run():
    t0 = time.perf_counter()
    res = fig3_run(0.5)
    elapsed = time.perf_counter() - t0
    f, fid = res.run.trace.rows[499].objective, res.run.trace.rows[499].fidelity
    ok = abs(f - 3.57e-3) <= 0.05 * 3.57e-3 and abs(fid - 0.99434) <= 0.003 and elapsed < 5
    check(1, "Ising-2 noiseless NESS run", ok,
          f"f(500)={f:.4g} (target 3.57e-3 +-5%), F={fid:.5f} (target 0.99434 +-0.003), {elapsed:.2f}s")


def test_02_noise_robustness():
    lines, ok = [], True
    for v0, f_max, fid_min in ((0.05, 5e-3, 0.99), (0.1, None, 0.985)):
        fs, fids, conv = [], [], []
        for seed in range(10):
            run = fig3_run(0.5, v0, seed).run
            fs.append(run.trace.rows[499].objective)
            fids.append(run.trace.rows[499].fidelity)
            conv.append(not run.diverged)
        good = min(fids) >= fid_min and all(conv) and (f_max is None or max(fs) <= f_max)
        ok &= good
        lines.append(f"v0={v0}: max f={max(fs):.4g}, min F={min(fids):.4f}, diverged={conv.count(False)}/10")
    check(2, "noise robustness over 10 seeds", ok, "; ".join(lines))


def test_03_learning_rate_sweep():
    finals = {}
    for g in (0.1, 0.3, 0.5, 1.0):
        finals[g] = fig3_run(g).run.trace.rows[499].objective
    probe = solve_ness(ising2(), 2.0, QgdConfig(max_iters=500, tolerance=1e-2))
    ok = all(f < 1e-2 for f in finals.values()) and probe.run.diverged
    detail = ", ".join(f"gamma={g:g}: f(500)={f:.3g}" for g, f in finals.items())
    check(3, "learning-rate sweep", ok,
          f"{detail}; gamma=2.0 divergence flag={probe.run.diverged} at s={probe.run.divergence_step}")


def test_04_linear_system():
    sys_ = reference_system()
    t0 = time.perf_counter()
    rep = solve_system(sys_.hamiltonian(), 0.3, QgdConfig(max_iters=20, tolerance=1e-6, early_stop=False),
                       init=StateVector.plus(4), truth=sys_.truth(), system=sys_)
    elapsed = time.perf_counter() - t0
    f = rep.run.trace.rows[19].objective
    ok = f <= 1e-6 and rep.fidelity_to_truth >= 0.999 and elapsed < 1
    check(4, "3-qubit linear system solve", ok, f"f(20)={f:.3g}, F={rep.fidelity_to_truth:.8f}, {elapsed:.3f}s")


def test_05_vectorizer_oracle():
    rng = np.random.default_rng(5005)
    worst = 0.0
    for k in range(200):
        m = random_model(rng, 1 + k % 2)
        worst = max(worst, float(np.max(np.abs(to_dense(vectorize(m).op) - dense_liouvillian_oracle(m)))))
    check(5, "vectorizer vs dense superoperator", worst < 1e-10, f"max deviation {worst:.2e} over 200 models")


def test_06_lcu_equivalence():
    rng = np.random.default_rng(6006)
    worst_state = worst_p = 0.0
    for k in range(50):
        n2 = 2 * (1 + k % 3)
        while True:
            d = random_hermitian_sum(rng, n2, int(rng.integers(1, 17)))
            if len(d):
                break
        D = GradientOperator(d)
        v0 = random_state(rng, n2)
        v, probs = v0, []
        for _ in range(3):
            blk = lcu_block(D, v)
            ref, _ = qgd_step(D, v)
            worst_state = max(worst_state, float(np.max(np.abs(blk.postselected_state.amplitudes - ref.amplitudes))))
            probs.append(blk.block_probability)
            v = blk.postselected_state
        w = np.linalg.matrix_power(kron_dense(d), 3) @ v0.amplitudes
        direct = np.vdot(w, w).real / (D.norm_sq * D.padded_terms) ** 3
        worst_p = max(worst_p, abs(math.prod(probs) - direct) / direct,
                      abs(success_probability(D, v0, 3) - direct) / direct)
    ok = worst_state < 1e-10 and worst_p < 1e-12
    check(6, "LCU circuit equivalence", ok,
          f"max state deviation {worst_state:.2e}, max relative P_suc deviation {worst_p:.2e} (50 cases, S=3)")


def test_07_error_bound():
    rng = np.random.default_rng(7007)
    violations = raw_violations = 0
    for _ in range(50):
        m = random_model(rng, 1)
        liouv = vectorize(m)
        sq = liouvillian_square(liouv)
        lmax = float(np.linalg.eigvalsh(to_dense(sq))[-1])
        D = build_gradient_operator(liouv, 0.9 / (2 * lmax))
        init = StateVector.plus(2)
        summ = spectral_summary(D, sq, init)
        run = qgd_run(D, sq, init, QgdConfig(max_iters=200, early_stop=False))
        floor = 64 * EPS * lmax
        for S, f in enumerate(run.trace.objectives, 1):
            err, bound = abs(f - summ.lambda1), error_bound(summ, S)
            violations += err > bound + floor
            raw_violations += err > bound
    check(7, "geometric error bound", violations == 0,
          f"{violations} violations in 10000 (model, S) pairs with a 64 eps lambda_max rounding floor "
          f"({raw_violations} without the floor)")


def test_08_hoeffding_coverage():
    plan = sample_plan(0.05, 0.01)
    res = solve_ness(ising2(), 0.2, QgdConfig(max_iters=1))
    rho = StateVector(res.spectrum.dominant_vector)
    ident = max_entangled_state(2)
    rates = {}
    for zeta in ("1", "i"):
        fails = sum(hadamard_test(zeta, ident, rho, plan.samples, seed).error > 0.05 for seed in range(1000))
        rates[zeta] = fails / 1000
    ok = all(r <= 0.02 for r in rates.values())
    check(8, "Hoeffding coverage", ok,
          f"R={plan.samples}, failure rate zeta=1: {rates['1']:.3f}, zeta=i: {rates['i']:.3f} (limit 0.02)")


def test_09_observable_pipeline():
    res = solve_ness(ising2(), 0.5, QgdConfig(max_iters=1))
    rho = StateVector(res.spectrum.dominant_vector)
    D = build_gradient_operator(vectorize(ising2()), 0.5)
    S = 3
    alg = run_algorithm(D, rho, S)
    ident = PauliSum.identity(2)

    def s1(M):
        return complex(strategy1_expectation(M, rho, "1").estimate, strategy1_expectation(M, rho, "i").estimate)

    def s2(M):
        parts = [strategy2_expectation(M, alg.psi_final, S, D.norm_sq, D.padded_terms, z).estimate
                 for z in ("1", "i")]
        return complex(*parts)

    worst, rows = 0.0, []
    for label in ("ZI", "XI", "ZZ"):
        M = PauliSum.from_string(label)
        exact = observable_expectation(rho, M).value
        v1 = s1(M) / s1(ident)
        v2 = s2(M) / s2(ident)
        worst = max(worst, abs(v1 - exact), abs(v2 - exact))
        rows.append(f"{label}={exact.real:+.6f}")
    check(9, "observable pipeline consistency", worst < 1e-8,
          f"{', '.join(rows)}; max disagreement {worst:.2e} (S={S})")


def test_10_baseline_comparison():
    qgd = fig3_run(0.5).run.trace.objectives
    trace = dvqe_trace()
    base = np.array(trace.losses)
    worse = [s for s in range(20, 501) if qgd[s - 1] > base[s - 1]]
    band = 2e-3 <= trace.min_loss <= 2e-2
    ok = not worse and band
    check(10, "QGD vs dVQE", ok,
          f"QGD above dVQE at {len(worse)} of 481 steps (s>=20, first s={worse[0] if worse else None}); "
          f"dVQE min loss {trace.min_loss:.4g} at step {trace.argmin_step} (band [2e-3, 2e-2]: {band})")


def test_11_preset_determinism():
    mismatched, compared = [], 0
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        for name in PRESETS:
            a, b = tmp / f"{name}_a", tmp / f"{name}_b"
            run_experiment(name, a, seed=0)
            run_experiment(name, b, seed=0)
            for path in sorted(a.glob("*.csv")):
                compared += 1
                if path.read_bytes() != (b / path.name).read_bytes():
                    mismatched.append(path.name)
    check(11, "preset determinism", compared > 0 and not mismatched,
          f"{compared} CSVs compared across {len(PRESETS)} presets, {len(mismatched)} differ")


if __name__ == "__main__":
    from conftest import ACCEPTANCE

    for name, fn in sorted((k, v) for k, v in globals().items() if k.startswith("test_")):
        try:
            fn()
        except AssertionError:
            pass
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        print(f"{number:>2}. {'PASS' if passed else 'FAIL'}  {title}: {detail}")
