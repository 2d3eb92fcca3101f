"""Build script for the optional compiled edge-aggregation kernels.

The package works without the extension (a numpy fallback is selected at
import time), so a failed Cython build degrades to the pure-Python path
instead of breaking the install.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "betamask._kernels._edgeops",
                ["src/betamask/_kernels/_edgeops.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
