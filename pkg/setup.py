#!/usr/bin/env python3
"""
Setup script for meta-social-learning package
"""

from setuptools import setup, find_packages

# Read the README file for long description
try:
    with open("README.md", "r", encoding="utf-8") as fh:
        long_description = fh.read()
except FileNotFoundError:
    long_description = "Meta-social learning strategies for multi-agent non-stationary bandits"

requirements = [
    "PyYAML>=6.0",
    "networkx>=2.8.0",
    "numpy>=1.24.0",
    "scipy>=1.11.0",  # stats.studentized_range, integrate.quad
    "pandas>=1.5.0",
    "matplotlib>=3.6.0",
]

setup(
    name="meta-social-learning",
    version="1.0.0",
    description="Multi-agent social learning and meta-strategy evolution on non-stationary bandits",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "tests.*"]),
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
    ],
    python_requires=">=3.9",
    install_requires=requirements,
    extras_require={
        "dev": ["pytest", "black", "flake8", "mypy"],
        "test": ["pytest", "pytest-cov"],
    },
    entry_points={
        "console_scripts": [
            "meta-social-learning=meta_social_learning.cli:main",
        ],
    },
    include_package_data=True,
    package_data={
        "meta_social_learning": [
            "config/*.yaml",
            "config/environments/*.yaml",
            "config/controllers/*.yaml",
        ],
    },
    keywords="social learning multi-agent bandits evolutionary dynamics replicator",
)
