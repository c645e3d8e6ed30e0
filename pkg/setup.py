"""Build script; compiles the optional replay kernel extension.

Run ``python setup.py build_ext --inplace`` to build the compiled kernel
for a source checkout. If Cython (or a C++ toolchain) is unavailable the
package installs without the extension and falls back to the pure-Python
kernel at import time.
"""
import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "cachepart.core._ckernel",
                ["src/cachepart/core/_ckernel.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
