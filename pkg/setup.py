"""Build script: compiles the optional Cython kernel.

The package is fully functional without the extension; the pure numpy
backend is selected at import when _kernels_c is absent.
"""
from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/signgate/_kernels_c.pyx"],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
