"""Build script for the optional compiled kernel extension.

The package is fully functional without the extension (a numpy fallback is
selected at import time); building it just makes the LSTM cell math faster.
"""

import os
import sys
import tempfile

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None


def _supported_flags(candidates):
    """Keep the compile flags the local C compiler actually accepts."""
    try:
        from setuptools._distutils.ccompiler import new_compiler
        from setuptools._distutils.errors import CCompilerError, DistutilsError
    except ImportError:  # pragma: no cover - very old setuptools
        return []
    compiler = new_compiler()
    kept = []
    with tempfile.TemporaryDirectory() as tmp:
        probe = os.path.join(tmp, "probe.c")
        with open(probe, "w") as fh:
            fh.write("int main(void) { return 0; }\n")
        for flag in candidates:
            try:
                compiler.compile([probe], output_dir=tmp, extra_postargs=kept + [flag])
            except (CCompilerError, DistutilsError):
                continue
            kept.append(flag)
    return kept


if sys.platform == "win32":
    _FAST_FLAGS = ["/O2", "/fp:fast"]
    _LIBS = []
else:
    _LIBS = ["m"]  # on glibc, libm's linker script pulls in libmvec as needed
    # -ffast-math lets the compiler route exp/tanh through the platform's
    # vector math library; the kernels clamp their own arguments so the
    # relaxed special-case handling is never exercised. -march=native is
    # probed because not every compiler/arch pair accepts it.
    _FAST_FLAGS = _supported_flags(["-O3", "-ffast-math", "-march=native"])

if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "dimser._kernels._cell_cy",
                ["src/dimser/_kernels/_cell_cy.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=_FAST_FLAGS,
                libraries=_LIBS,
            )
        ],
        language_level="3",
    )
else:
    ext_modules = []

setup(ext_modules=ext_modules)
