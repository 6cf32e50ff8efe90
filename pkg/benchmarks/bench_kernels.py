"""Timing comparison of the compiled banded-Cholesky kernels against
the pure-numpy fallback, plus an end-to-end cell potential solve.

Run from the repository root:

    python benchmarks/bench_kernels.py
"""

import argparse
import time

import numpy as np

from cellgamma.kernels import HAVE_COMPILED, _banded_py

if HAVE_COMPILED:
    from cellgamma.kernels import _banded_cy
else:
    _banded_cy = None


def _spd_band(rng, batch, n):
    """Batched SPD pentadiagonal systems in lower banded storage."""
    ab = np.zeros((batch, 3, n))
    ab[:, 0, :] = 4.0 + rng.random((batch, n))
    ab[:, 1, :-1] = -1.0 + 0.2 * rng.random((batch, n - 1))
    ab[:, 2, :-2] = -0.5 + 0.1 * rng.random((batch, n - 2))
    return ab


def _time(fn, *args, repeats=5):
    best = np.inf
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_case(batch, n, rng):
    ab = _spd_band(rng, batch, n)
    b = rng.standard_normal((batch, n, 4))
    t_f_py, c_py = _time(_banded_py.chol_factor_banded, ab)
    t_s_py, x_py = _time(_banded_py.chol_solve_banded, c_py, b)
    line = f"batch={batch:5d} n={n:5d}  python: factor {t_f_py*1e3:8.3f} ms, solve {t_s_py*1e3:8.3f} ms"
    if _banded_cy is not None:
        t_f_cy, c_cy = _time(_banded_cy.chol_factor_banded, ab)
        t_s_cy, x_cy = _time(_banded_cy.chol_solve_banded, c_cy, b)
        assert np.array_equal(x_py, x_cy), "implementations disagree"
        speedup = (t_f_py + t_s_py) / (t_f_cy + t_s_cy)
        line += (f" | compiled: factor {t_f_cy*1e3:8.3f} ms,"
                 f" solve {t_s_cy*1e3:8.3f} ms | speedup {speedup:5.2f}x")
    print(line)


def bench_poisson(res):
    from cellgamma.grid import TensorField, build_cell_grid, build_frame
    from cellgamma.poisson import BcVariant, solve_cell_poisson

    g = build_cell_grid(build_frame([1.0, 0.0]), res, n_lateral=res)
    rng = np.random.default_rng(0)
    M = TensorField(g, rng.standard_normal(g.shape + (1, 2)))
    t, _ = _time(solve_cell_poisson, M, BcVariant.DIRICHLET, repeats=3)
    which = "compiled" if HAVE_COMPILED else "fallback"
    print(f"cell potential solve {res}x{res} ({which} kernels): {t*1e3:8.3f} ms")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    rng = np.random.default_rng(args.seed)
    print(f"compiled extension available: {HAVE_COMPILED}")
    for batch, n in [(16, 64), (128, 128), (512, 256), (2048, 512)]:
        bench_case(batch, n, rng)
    for res in (64, 128, 256):
        bench_poisson(res)


if __name__ == "__main__":
    main()
