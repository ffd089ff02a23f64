import os

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup


def cpu_has_fma():
    if os.environ.get("MDLSQ_NO_FMA"):
        return False
    try:
        with open("/proc/cpuinfo") as f:
            for line in f:
                if line.startswith("flags"):
                    return " fma " in f" {line.strip()} "
    except OSError:
        pass
    return False


# exactness of the error-free transforms forbids contraction and fast-math
compile_args = ["-O3", "-ffp-contract=off", "-fno-fast-math"]
if cpu_has_fma():
    compile_args.append("-mfma")

extensions = [
    Extension(
        "mdlsq._core",
        ["src/mdlsq/_core.pyx"],
        include_dirs=[np.get_include(), "src/mdlsq"],
        extra_compile_args=compile_args,
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
