"""Setup file for the noisegate Python package."""
from setuptools import setup, find_packages


setup(
    name="noisegate",
    version="0.1.0",
    description="Estimate discretization noise around a cutpoint and its impact on classifiers",
    python_requires=">=3.10",
    packages=find_packages(exclude=["tests", "examples", "examples.*"]),
    package_data={
        "noisegate": [
            "schema/*.yaml",
            "schema/*.json",
            "learners_definitions/*/learner.yaml",
        ],
    },
    install_requires=[
        "PyYAML",
        "jsonschema",
        "numpy>=1.23",
        "scipy>=1.9",
        "pandas>=1.5",
        "scikit-learn>=1.2",
        "tomli>=2.0; python_version < '3.11'",
    ],
    extras_require={"test": ["pytest>=7"]},
    entry_points={
        "console_scripts": [
            "noisegate=noisegate.cli:main",
        ],
    },
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
    ],
)
