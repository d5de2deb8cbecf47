"""Build the optional OpenMP kernel extension.

If Cython or a C compiler is missing the package still installs and falls
back to the numpy kernels at import time.
"""
import os
import sys

from setuptools import setup

ext_modules = []
if os.environ.get("GATHERFV_NO_EXT", "") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        openmp = [] if sys.platform == "darwin" else ["-fopenmp"]
        ext_modules = cythonize(
            [
                Extension(
                    "gatherfv._kernels",
                    ["src/gatherfv/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3", "-ffp-contract=off"] + openmp,
                    extra_link_args=openmp,
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError as exc:  # pragma: no cover
        print(f"gatherfv: building without compiled kernels ({exc})")

setup(ext_modules=ext_modules)
