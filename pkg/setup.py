"""Build script.

The compiled scoring kernel is optional: when Cython is unavailable the
package installs without it and falls back to the numpy implementation
selected in ltn_offer.kernels.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None:
    extensions = cythonize(
        [Extension("ltn_offer._core", ["src/ltn_offer/_core.pyx"])],
        language_level="3",
    )

setup(ext_modules=extensions)
