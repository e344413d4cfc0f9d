import numpy as np
import pytest

from qgdsim.lindblad import LindbladModel, build_gradient_operator, ising_model, vectorize
from qgdsim.pauli import PauliString, PauliSum

LETTERS = "IXYZ"

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}


def kron_string(letters):
    out = np.eye(1, dtype=complex)
    for ch in letters:
        out = np.kron(out, PAULI[ch])
    return out


def kron_dense(op: PauliSum):
    """Independent dense oracle: explicit Kronecker products."""
    dim = 2 ** op.n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for s, c in op.items():
        out += c * kron_string(s)
    return out


def random_sum(rng, n, n_terms, complex_coeffs=True):
    terms = []
    for _ in range(n_terms):
        s = "".join(rng.choice(list(LETTERS), size=n))
        c = rng.normal() + (1j * rng.normal() if complex_coeffs else 0)
        terms.append((c, PauliString(s)))
    return PauliSum(n, terms)


def random_hermitian_sum(rng, n, n_terms):
    return random_sum(rng, n, n_terms, complex_coeffs=False).as_hermitian()


def random_state(rng, n):
    from qgdsim.pauli import StateVector

    v = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
    return StateVector(v / np.linalg.norm(v))


def random_model(rng, n_sites, max_jumps=2):
    ham = random_hermitian_sum(rng, n_sites, int(rng.integers(1, 4)))
    if len(ham) == 0:
        ham = PauliSum.zero(n_sites).as_hermitian()
    jumps = []
    for _ in range(int(rng.integers(1, max_jumps + 1))):
        jumps.append((random_sum(rng, n_sites, int(rng.integers(1, 3))), float(rng.uniform(0.05, 1.0))))
    return LindbladModel(n_sites, ham, tuple(jumps))


@pytest.fixture(scope="session")
def ising2():
    return ising_model(2, 1.0, 1.0, [0.1, 0.1])


@pytest.fixture(scope="session")
def ising2_liouv(ising2):
    return vectorize(ising2)


@pytest.fixture(scope="session")
def ising2_D(ising2_liouv):
    return build_gradient_operator(ising2_liouv, 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# acceptance reporting ----------------------------------------------------------

ACCEPTANCE = {}


def record_acceptance(number, title, passed, detail):
    ACCEPTANCE[number] = (title, bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"{number:>2}. {'PASS' if passed else 'FAIL'}  {title}: {detail}")
