"""Hot numerical kernels with a compiled core and a pure-numpy fallback.

The compiled extension is optional: if it failed to build (or the
environment variable ``CELLGAMMA_FORCE_PY`` is set to a non-empty
value), the vectorized numpy implementation is used instead.  Both
expose the same two functions:

``chol_factor_banded(ab)``
    Batched Cholesky factorization of SPD matrices of bandwidth 2.
``chol_solve_banded(c, b)``
    Batched triangular solves with the factor from above.
"""

import os

from . import _banded_py

HAVE_COMPILED = False
if not os.environ.get("CELLGAMMA_FORCE_PY"):
    try:
        from . import _banded_cy  # type: ignore[attr-defined]

        HAVE_COMPILED = True
    except ImportError:
        _banded_cy = None
else:
    _banded_cy = None

if HAVE_COMPILED:
    chol_factor_banded = _banded_cy.chol_factor_banded
    chol_solve_banded = _banded_cy.chol_solve_banded
else:
    chol_factor_banded = _banded_py.chol_factor_banded
    chol_solve_banded = _banded_py.chol_solve_banded

__all__ = ["chol_factor_banded", "chol_solve_banded", "HAVE_COMPILED"]
