import os

from setuptools import Extension, setup

# The compiled queue/prefix-sum core is optional: clocksim falls back to the
# pure-Python twin at import time if the extension is absent.
ext_modules = []
if os.environ.get("CLOCKSIM_SKIP_EXT", "") not in ("1", "true", "yes"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "clocksim._structs",
                    ["src/clocksim/_structs_cy.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
