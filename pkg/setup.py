from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "measchain._window_ext",
                ["src/measchain/_window_ext.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level="3",
    )
except ImportError:
    # No Cython at build time: install the pure-NumPy package; the kernel
    # dispatcher falls back automatically.
    ext_modules = None

setup(ext_modules=ext_modules)
