from setuptools import Extension, setup
from Cython.Build import cythonize

extensions = [
    Extension(
        "wiesnerlab._rounds._crounds",
        sources=["src/wiesnerlab/_rounds/_crounds.pyx"],
        extra_compile_args=["-O3"],
    )
]

setup(
    ext_modules=cythonize(extensions, language_level="3"),
)
