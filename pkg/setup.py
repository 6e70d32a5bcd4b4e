#!/usr/bin/env python
# -*- coding: utf-8 -*-

# pylint: skip-file

import sys
from pathlib import Path

from setuptools import find_packages, setup

HERE = Path(__file__).parent

requirements = [
    "tensorflow>=2.4.0",  # tf.random.stateless_gamma
    "tensorflow-probability[tf]>=0.12.0",  # tfp.math.scan_associative
    "numpy",
    "scipy",
    "multipledispatch>=0.6",
    "tabulate",
    "typing_extensions",
    "setuptools>=41.0.0",  # pkg_resources in versions.py
]

if sys.version_info < (3, 7):
    requirements.append("dataclasses")


setup(
    name="spde_hypotest",
    version=(HERE / "VERSION").read_text(encoding="utf-8").strip(),
    description="Drift hypothesis tests for the stochastic fractional heat equation",
    long_description=(HERE / "README.md").read_text(encoding="utf-8"),
    long_description_content_type="text/markdown",
    license="Apache License 2.0",
    keywords="spde hypothesis-testing large-deviations ornstein-uhlenbeck tensorflow",
    packages=find_packages(".", exclude=["tests", "tests.*"]),
    install_requires=requirements,
    entry_points={"console_scripts": ["spde-hypotest=spde_hypotest.cli:main"]},
    python_requires=">=3.6",
    classifiers=[
        "License :: OSI Approved :: Apache Software License",
        "Intended Audience :: Science/Research",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
)
