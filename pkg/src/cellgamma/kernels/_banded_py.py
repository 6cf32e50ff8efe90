"""Pure-numpy fallback for the batched banded-Cholesky kernels.

Band layout for a symmetric positive-definite matrix of bandwidth 2:
``ab[b, 0, j] = A[j, j]``, ``ab[b, 1, j] = A[j+1, j]``, ``ab[b, 2, j] =
A[j+2, j]`` for every batch entry ``b``.  The trailing entries of the
sub-diagonal rows are ignored.

The loops run over the matrix dimension only; all batch entries advance
in lock-step through vectorized numpy operations, so the fallback stays
usable for the mode counts produced by the spectral Poisson solver.
"""

import numpy as np


def chol_factor_banded(ab):
    """Batched Cholesky factorization of SPD band matrices.

    Parameters
    ----------
    ab : (M, 3, n) float64 array, band storage as described above.

    Returns
    -------
    (M, 3, n) float64 array holding the lower Cholesky factor in the
    same band layout.
    """
    ab = np.ascontiguousarray(ab, dtype=np.float64)
    m, rows, n = ab.shape
    if rows != 3:
        raise ValueError("band storage must have 3 rows")
    c = np.zeros_like(ab)
    l0, l1, l2 = c[:, 0], c[:, 1], c[:, 2]
    a0, a1, a2 = ab[:, 0], ab[:, 1], ab[:, 2]
    for j in range(n):
        d = a0[:, j].copy()
        if j >= 1:
            d -= l1[:, j - 1] ** 2
        if j >= 2:
            d -= l2[:, j - 2] ** 2
        if np.any(d <= 0.0):
            raise np.linalg.LinAlgError("matrix not positive definite")
        l0[:, j] = np.sqrt(d)
        if j + 1 < n:
            t = a1[:, j].copy()
            if j >= 1:
                t -= l2[:, j - 1] * l1[:, j - 1]
            l1[:, j] = t / l0[:, j]
        if j + 2 < n:
            l2[:, j] = a2[:, j] / l0[:, j]
    return c


def chol_solve_banded(c, b):
    """Solve ``A x = b`` for each batch entry given the banded factor.

    Parameters
    ----------
    c : (M, 3, n) factor from :func:`chol_factor_banded`.
    b : (M, n, r) float64 right-hand sides.

    Returns
    -------
    (M, n, r) float64 solutions.
    """
    c = np.asarray(c, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    m, _, n = c.shape
    if b.shape[0] != m or b.shape[1] != n:
        raise ValueError("rhs shape does not match factor")
    l0, l1, l2 = c[:, 0], c[:, 1], c[:, 2]
    y = np.empty_like(b)
    for j in range(n):
        t = b[:, j, :].copy()
        if j >= 1:
            t -= l1[:, j - 1, None] * y[:, j - 1, :]
        if j >= 2:
            t -= l2[:, j - 2, None] * y[:, j - 2, :]
        y[:, j, :] = t / l0[:, j, None]
    x = np.empty_like(b)
    for j in range(n - 1, -1, -1):
        t = y[:, j, :].copy()
        if j + 1 < n:
            t -= l1[:, j, None] * x[:, j + 1, :]
        if j + 2 < n:
            t -= l2[:, j, None] * x[:, j + 2, :]
        x[:, j, :] = t / l0[:, j, None]
    return x
