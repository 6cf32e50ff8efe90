"""Build script: compiles the optional banded-solver extension.

The package works without the extension (a NumPy fallback is selected
at import time), so any build failure here downgrades to a pure-Python
install instead of aborting.
"""

from setuptools import setup
from setuptools.extension import Extension

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext = Extension(
        "cellgamma.kernels._banded_cy",
        sources=["src/cellgamma/kernels/_banded_cy.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext_modules = cythonize([ext], compiler_directives={"language_level": "3"})
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"cellgamma: skipping compiled kernels ({exc}); "
          "using the pure-Python fallback")

setup(ext_modules=ext_modules)
