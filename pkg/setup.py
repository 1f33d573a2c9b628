"""Build script for the optional compiled kernels.

The package works without them: ``eegpnn.kernels`` falls back to the numpy
implementation when the extension is missing.
"""
import os

import numpy
from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("EEGPNN_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "eegpnn._kernels",
                    ["src/eegpnn/_kernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
