# setup.py build_ext --inplace
#
# The compiled window kernel is optional: if Cython (or a C compiler) is
# unavailable the package installs pure-Python and ergolab.windows falls
# back to the segment engine at import time.
import sys

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/ergolab/windows/_kernel.pyx"],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
            "cdivision": True,
        },
    )
    for ext in ext_modules:
        ext.extra_compile_args = ["-O3"]
except ImportError as exc:  # pragma: no cover - build-environment dependent
    print(f"warning: building without the compiled window kernel ({exc})",
          file=sys.stderr)

setup(ext_modules=ext_modules)
