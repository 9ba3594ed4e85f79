import glob
import subprocess

from pybind11.setup_helpers import Pybind11Extension, build_ext
from setuptools import setup


def eigen_include():
    try:
        out = subprocess.check_output(["pkg-config", "--cflags-only-I", "eigen3"], text=True)
        return [flag[2:] for flag in out.split() if flag.startswith("-I")]
    except Exception:
        return ["/usr/include/eigen3"]


ext = Pybind11Extension(
    "sem2space._sem2space",
    sorted(glob.glob("src/*.cpp")) + ["bindings/pymodule.cpp"],
    include_dirs=["include", "vendor"] + eigen_include(),
    libraries=["z"],
    cxx_std=20,
)

setup(ext_modules=[ext], cmdclass={"build_ext": build_ext})
