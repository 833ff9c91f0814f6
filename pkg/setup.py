import os

from setuptools import setup

ext_modules = []
if os.environ.get("SQLTOKOPT_NO_EXT", "") in ("", "0"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("sqltokopt._scan_c", ["src/sqltokopt/_scan_c.pyx"], extra_compile_args=["-O3"])],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        # pure-Python kernels are used at runtime
        ext_modules = []

setup(ext_modules=ext_modules)
