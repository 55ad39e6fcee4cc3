"""Build hook for the optional Cython kernels.

If Cython or a compiler is missing, the package still installs and falls
back to the pure NumPy kernels at import time.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("qregpn._kernels", ["src/qregpn/_kernels.pyx"],
                   include_dirs=[np.get_include()],
                   extra_compile_args=["-O3"])],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover
    print(f"qregpn: building without compiled kernels ({exc})")

setup(ext_modules=ext_modules)
