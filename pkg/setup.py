"""Build script: compiles the optional quantization kernel.

If Cython or a C compiler is unavailable the package installs without the
extension and falls back to the numpy implementation at import time.
"""
import os
import sys

from setuptools import setup

ext_modules = []
if os.environ.get("HEISCALC_NO_EXT", "") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        openmp = ["-fopenmp"] if sys.platform.startswith("linux") else []
        ext = Extension(
            "heiscalc.quantize._kernel",
            ["src/heiscalc/quantize/_kernel.pyx"],
            include_dirs=[np.get_include()],
            extra_compile_args=["-O3", "-fcx-limited-range"] + openmp,
            extra_link_args=openmp,
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )
        ext_modules = cythonize([ext], language_level=3, quiet=True)
    except Exception as exc:  # pragma: no cover - build environment dependent
        print(f"heiscalc: building without compiled kernel ({exc})", file=sys.stderr)
        ext_modules = []

setup(ext_modules=ext_modules)
