import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

ext_modules = cythonize(
    [Extension("lkcand._ckernels", ["src/lkcand/_ckernels.pyx"], include_dirs=[np.get_include()])],
    compiler_directives={"language_level": 3},
)

setup(ext_modules=ext_modules)
