"""Time the compiled and numpy Pauli-sum kernels on random operators.

    python3 benchmarks/bench_kernels.py [--qubits 4 8 12] [--terms 64] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from qgdsim import _pykernels
from qgdsim.pauli import PauliString, PauliSum

try:
    from qgdsim import _kernels
except ImportError:
    _kernels = None


def random_operator(rng, n, terms):
    letters = np.array(list("IXYZ"))
    pairs = [(complex(rng.normal()), PauliString("".join(rng.choice(letters, n)))) for _ in range(terms)]
    return PauliSum(n, pairs)


def best_time(fn, repeat):
    number = 1
    while timeit.timeit(fn, number=number) < 0.05:
        number *= 2
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--qubits", type=int, nargs="+", default=[4, 8, 12, 16])
    parser.add_argument("--terms", type=int, default=64)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    rng = np.random.default_rng(args.seed)

    impls = [("numpy", _pykernels)] + ([("cython", _kernels)] if _kernels else [])
    print(f"{'qubits':>6} {'kernel':>12} " + " ".join(f"{name:>12}" for name, _ in impls)
          + ("   speedup" if len(impls) == 2 else ""))
    for n in args.qubits:
        op = random_operator(rng, n, args.terms)
        xs, zs, cs = op._kernel_arrays
        v = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
        v /= np.linalg.norm(v)
        for kernel in ("apply", "expectation"):
            times = []
            for _, mod in impls:
                fn = getattr(mod, f"{kernel}_pauli_sum")
                times.append(best_time(lambda: fn(xs, zs, cs, v), args.repeat))
            row = f"{n:>6} {kernel:>12} " + " ".join(f"{t * 1e3:>10.3f}ms" for t in times)
            if len(times) == 2:
                row += f"   {times[0] / times[1]:>6.1f}x"
            print(row)
    if _kernels is None:
        print("compiled extension not available; only the numpy kernels were timed")


if __name__ == "__main__":
    main()
