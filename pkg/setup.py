from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # fall back to the pure-Python kernels
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "symext._ext._kernels",
                ["src/symext/_ext/_kernels.pyx"],
                extra_compile_args=["-O3", "-fno-math-errno", "-ffinite-math-only", "-fno-signed-zeros"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
