"""Build glue for the optional compiled trajectory kernels.

The package is pure Python plus one Cython extension. If the extension
cannot be built (no compiler, no Cython) the install still succeeds and
the numpy fallback kernels are selected at import time.
"""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class _OptionalBuildExt(build_ext):
    """build_ext that degrades to a pure-Python install on failure."""

    def run(self):
        try:
            super().run()
        except Exception as exc:
            print(f"warning: compiled kernels skipped ({exc}); numpy fallback will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: building {ext.name} failed ({exc}); numpy fallback will be used")


def _extensions():
    if os.environ.get("EPRB_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "eprb.kernels._fast",
        sources=["src/eprb/kernels/_fast.pyx"],
        # -O3 only: no -ffast-math / -march=native, results must be
        # bit-reproducible and must track the numpy fallback closely.
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=_extensions(), cmdclass={"build_ext": _OptionalBuildExt})
