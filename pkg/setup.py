"""Build script: compiles the optional grid-path speedup extension.

The package is fully functional without the extension (a NumPy fallback is
selected at import time), so any build failure here downgrades to a pure
Python install instead of aborting.
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
                "spotrees._kernels._gridpath",
                ["src/spotrees/_kernels/_gridpath.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
