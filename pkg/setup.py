import os

import numpy
from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("LIDARCOUNT_SKIP_NATIVE"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "lidarcount._kernels._native",
                    ["src/lidarcount/_kernels/_native.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level="3",
        )
    except ImportError:
        # No Cython available: install the pure-numpy package; the kernel
        # dispatcher falls back automatically.
        ext_modules = []

setup(ext_modules=ext_modules)
