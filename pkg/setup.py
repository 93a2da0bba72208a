"""Build script: compiles the simplex pivot kernel when Cython is available.

The package works without the extension; optmut.solver.kernel falls back to
the pure-Python kernel at import time.
"""

from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    extensions = cythonize(
        [
            Extension(
                "optmut.solver._simplexc",
                ["src/optmut/solver/_simplexc.pyx"],
                include_dirs=[numpy.get_include()],
                # no -ffast-math / fp-contract: the compiled kernel must be
                # bit-identical to the pure-Python one
                extra_compile_args=["-O2", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
