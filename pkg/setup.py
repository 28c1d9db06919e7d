"""Builds the optional compiled kernel extension.

The package works without it (a numpy fallback is selected at import time);
set PLAF_NO_EXT=1 to skip the extension build entirely.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("PLAF_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize

        ext_modules = cythonize(
            ["src/plaf/kernels/_native.pyx"],
            compiler_directives={"language_level": "3"},
        )
        for ext in ext_modules:
            ext.include_dirs.append(np.get_include())
            # keep floating point strictly IEEE so both backends agree bitwise
            ext.extra_compile_args = ["-O3", "-ffp-contract=off"]
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
