import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the accelerator extension if possible; fall back to pure Python."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, etc.
            warnings.warn(f"skipping compiled kernels ({exc}); pure-Python fallback will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"skipping {ext.name} ({exc}); pure-Python fallback will be used")


ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("mulocal._kernels", ["src/mulocal/_kernels.pyx"])],
        language_level=3,
    )
except ImportError:
    warnings.warn("Cython not available; installing without compiled kernels")

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
