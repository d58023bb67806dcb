"""Build script: compiles the skip-gram inner-loop extension when Cython is
available.  The package works without it (pure-Python fallback), just slower."""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "tweetcnn.embed._sg_fast",
                sources=["src/tweetcnn/embed/_sg_fast.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # no FMA contraction: keeps float rounding identical to the
                # pure-Python fallback so the backends stay bit-compatible
                extra_compile_args=["-ffp-contract=off"],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
