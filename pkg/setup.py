import os
import re

import setuptools


def get_version(package: str):
    """Return package version as listed in `__version__` in `init.py`."""
    init_py = open(os.path.join(package, "__init__.py")).read()
    return re.search("__version__ = ['\"]([^'\"]+)['\"]", init_py).group(1)


def get_requirements(path: str):
    with open(path) as f:
        return [line.strip() for line in f if line.strip() and not line.startswith("#")]


with open("README.md", "r") as fh:
    long_description = fh.read()


extras = {
    "docs": get_requirements("requirements-dev.txt"),
}

setuptools.setup(
    name="corrsel",
    version=get_version("corrsel"),
    description="Sensor selection and scheduling for estimation under correlated measurement noise",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=setuptools.find_packages(exclude=["tests", "tests.*"]),
    python_requires=">=3.8",
    install_requires=get_requirements("requirements.txt"),
    extras_require=extras,
    entry_points={"console_scripts": ["corrsel=corrsel.cli:cli"]},
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
)
