"""Build script for the optional compiled simplex kernel.

Installation still succeeds without Cython or a C compiler; the package then
falls back to the pure-Python kernel at import time.
"""
from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("blackwell_kit.lp._simplex", ["src/blackwell_kit/lp/_simplex.pyx"],
                   include_dirs=[np.get_include()],
                   define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")])],
        compiler_directives={"language_level": "3"},
    )
except ImportError:  # pragma: no cover - build environment without Cython
    pass

setup(ext_modules=ext_modules)
