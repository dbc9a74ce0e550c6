"""Build the optional compiled kernels; the package falls back to numpy without them."""
import numpy
from setuptools import setup
from setuptools.extension import Extension

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("sns_chain.kernels._core", ["src/sns_chain/kernels/_core.pyx"],
                   include_dirs=[numpy.get_include()], extra_compile_args=["-O3"])],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
