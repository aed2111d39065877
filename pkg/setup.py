"""Build script with an optional compiled kernel.

The package is fully functional without the extension (a pure-Python kernel
with identical semantics is selected at import time), so any failure to build
or cythonize the extension downgrades to a pure install instead of aborting.
"""

import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext
from setuptools.errors import CCompilerError, ExecError, PlatformError

BUILD_ERRORS = (CCompilerError, ExecError, PlatformError, OSError, ValueError)


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    from setuptools import Extension

    # -ffp-contract=off: the kernel recovers exact rounding errors with
    # TwoSum/Dekker sequences, and fused multiply-adds would change their
    # results. MSVC does not contract by default and rejects the flag.
    flags = [] if sys.platform == "win32" else ["-ffp-contract=off"]
    ext = Extension(
        "krawcert._kernel._cykernel",
        sources=["src/krawcert/_kernel/_cykernel.pyx"],
        extra_compile_args=flags,
    )
    return cythonize(
        [ext],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )


class OptionalBuildExt(build_ext):
    """Skip the extension (with a notice) when the toolchain is unusable."""

    def run(self):
        try:
            super().run()
        except BUILD_ERRORS as exc:
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except BUILD_ERRORS as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(
            "WARNING: building the compiled kernel failed; "
            "installing with the pure-Python kernel only.\n"
            f"         reason: {exc}",
            file=sys.stderr,
        )


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": OptionalBuildExt},
)
