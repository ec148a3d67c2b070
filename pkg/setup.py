"""Build script for the optional compiled kernel.

The package works without the extension (a pure-Python mirror is selected
at import time), so compilation failures are tolerated unless
FORKGARDEN_REQUIRE_EXT is set.  Set FORKGARDEN_NO_EXT to skip the build
entirely, e.g. to test the fallback path.

-ffp-contract=off keeps the compiler from fusing multiply-adds so the
compiled kernel stays bit-identical to the pure-Python mirror.
"""

import os

from setuptools import Extension, setup


def extensions():
    if os.environ.get("FORKGARDEN_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        if os.environ.get("FORKGARDEN_REQUIRE_EXT"):
            raise
        return []
    ext = Extension(
        "forkgarden._kernels",
        ["src/forkgarden/_kernels.pyx"],
        extra_compile_args=["-O2", "-ffp-contract=off"],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions())
