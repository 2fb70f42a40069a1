import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("REFINERY_NO_EXTENSION") != "1":
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "refinery._kernels._core",
                    ["src/refinery/_kernels/_core.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    optional=True,
                )
            ],
            language_level=3,
        )
    except ImportError:
        # no Cython at build time: install the pure-python lane only
        ext_modules = []

setup(ext_modules=ext_modules)
