"""Builds the optional compiled kernels; the package falls back to pure Python without them."""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("IMPLOSION_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("implosion._kernels", ["src/implosion/_kernels.pyx"],
                       include_dirs=[numpy.get_include()], extra_compile_args=["-O3", "-fcx-limited-range"])],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
