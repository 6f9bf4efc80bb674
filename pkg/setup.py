"""Build script for the optional compiled kernels.

The Cython extension is marked optional: if it fails to compile, the package
still installs and ``otlab.kernels`` falls back to the pure-Python backend.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "otlab._ckernels",
                ["src/otlab/_ckernels.pyx"],
                extra_compile_args=["-O3"],
                language="c++",
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
