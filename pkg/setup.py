"""Build script: compiles the transport-simplex kernel when Cython and a C
toolchain are available; the package falls back to the pure-Python kernel
otherwise, so the extension is strictly optional."""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "bidforge.transport_metrics._simplex_cy",
                ["src/bidforge/transport_metrics/_simplex_cy.pyx"],
            )
        ],
        language_level="3",
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
