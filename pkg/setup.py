import os

from setuptools import Extension, setup

# The compiled kernels are optional: graphtab falls back to the pure numpy
# implementation when the extension is missing (GRAPHTAB_NO_EXT=1 skips the build).
ext_modules = []
if not os.environ.get("GRAPHTAB_NO_EXT"):
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "graphtab._kernels",
                ["src/graphtab/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O2"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
