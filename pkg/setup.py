"""Build the optional Cython kernels; the package works without them."""
import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("DFSKIT_PURE_PYTHON") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [Extension("dfskit._kernels", ["src/dfskit/_kernels.pyx"],
                       include_dirs=[np.get_include()], extra_compile_args=["-O3", "-fcx-limited-range"])],
            language_level=3,
        )

setup(ext_modules=ext_modules)
