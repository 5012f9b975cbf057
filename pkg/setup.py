from pathlib import Path

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

_npyrandom_lib_dir = str(Path(np.get_include()).parent.parent / "random" / "lib")

ext_modules = []
if cythonize is not None:
    ext = Extension(
        "bngop._kernels",
        ["src/bngop/_kernels.pyx"],
        include_dirs=[np.get_include()],
        library_dirs=[_npyrandom_lib_dir],
        libraries=["npyrandom"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        # -ffp-contract=off keeps the compiled kernels bit-identical to the
        # pure-numpy fallback (no FMA contraction).
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    ext_modules = cythonize([ext], language_level=3)

setup(ext_modules=ext_modules)
