import os

from setuptools import Extension, setup

# The compiled join kernel is optional: the package falls back to the pure
# Python kernel when the extension is unavailable. Set MOODLOGIC_NO_EXT=1 to
# skip the build entirely.
ext_modules = []
if os.environ.get("MOODLOGIC_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "moodlogic.datalog.kernels._cjoin",
                    sources=["src/moodlogic/datalog/kernels/_cjoin.pyx"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
