import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "cornerlayer.kernels._ckern",
                ["src/cornerlayer/kernels/_ckern.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # No Cython: install the pure-Python package; the NumPy kernel
    # backend is selected at import time.
    extensions = []

setup(ext_modules=extensions)
