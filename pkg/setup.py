"""Build script: compiles the optional extension kernels when Cython is available.

Without Cython (or a working C compiler) the package installs anyway and the
pure-numpy fallback kernels are selected at import time.
"""

from setuptools import Extension, setup

extensions = [
    Extension(
        "disktess._kernels._core",
        ["src/disktess/_kernels/_core.pyx"],
        extra_compile_args=["-O3"],
    )
]

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(extensions, language_level="3")
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
