"""Build script.

The compiled extension is optional: if Cython (or a C compiler) is
unavailable the package installs anyway and the dispatcher in
``npi._backend`` falls back to its pure NumPy implementations.
"""

import numpy as np
from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/npi/_core.pyx",
        language_level=3,
        compiler_directives={"boundscheck": False, "wraparound": False},
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"npi: skipping compiled core ({exc}); pure-python fallback will be used")

setup(
    ext_modules=ext_modules,
    include_dirs=[np.get_include()],
)
