import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "fraclangevin._ckernels",
        ["src/fraclangevin/_ckernels.pyx"],
        include_dirs=[numpy.get_include()],
        # no FMA contraction so results track the NumPy fallback
        extra_compile_args=["-O2", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
