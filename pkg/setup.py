"""Build script: compiles the optional IMEX stepping kernel.

The package works without the extension (a NumPy fallback is selected at
import time), so a failed compile only costs speed.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "frontlab.kernels._imex",
                ["src/frontlab/kernels/_imex.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"warning: compiled kernel skipped ({exc}); pure NumPy backend will be used")

setup(ext_modules=ext_modules)
