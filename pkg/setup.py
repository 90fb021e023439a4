import os

from setuptools import Extension, setup

# The compiled kernel core is optional: without Cython (or a C compiler)
# the package falls back to the pure-Python kernels at import time.
extensions = []
if os.path.exists("src/redblue/_core.pyx"):
    try:
        from Cython.Build import cythonize

        extensions = cythonize(
            [Extension("redblue._core", ["src/redblue/_core.pyx"])],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except ImportError:
        pass

setup(ext_modules=extensions)
