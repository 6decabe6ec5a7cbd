import os

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# -ffp-contract=off is load-bearing: the Kahan and scalar paths need every
# multiply and add rounded separately.  Never add -ffast-math here.
compile_args = ["-O3", "-ffp-contract=off", "-fno-fast-math"]
if os.environ.get("TCEMU_PORTABLE") != "1":
    compile_args.append("-march=native")

extensions = [
    Extension(
        "tcemu._kernels",
        ["src/tcemu/_kernels.pyx", "src/tcemu/_ext/fold.c"],
        include_dirs=["src/tcemu/_ext", np.get_include()],
        extra_compile_args=compile_args,
    )
]

if os.environ.get("TCEMU_NO_EXT") == "1":
    extensions = []

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}),
)
