import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# Compiled hot kernels (pairwise distances, perplexity search, t-SNE gradient).
# popscope.analytics.kernels falls back to the NumPy implementations when the
# extension is absent, so a failed build still leaves a working package.
extensions = [
    Extension(
        "popscope._ckernels",
        ["src/popscope/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(extensions, language_level="3"))
