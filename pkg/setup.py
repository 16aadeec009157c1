"""Setup configuration for the Sparse Bandit Lab."""

from setuptools import setup, find_packages

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setup(
    name="sparse-bandit-lab",
    version="1.0.0",
    author="Bandit Lab Team",
    author_email="bandit-lab@company.com",
    description="Variational Thompson sampling for sparse linear contextual bandits",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "examples", "examples.*"]),
    py_modules=["main"],
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    python_requires=">=3.9",
    install_requires=[
        "numpy>=1.25.0",
        "scipy>=1.10.0",
        "scikit-learn>=1.3.0",
        "pandas>=2.0.0",
        "matplotlib>=3.7.0",
        "joblib>=1.3.0",
        "pyyaml>=6.0",
        "pydantic>=2.7.0",
        "pydantic-settings>=2.2.0",
        "python-dotenv>=1.0.0",
        "typer>=0.12.0",
        "rich>=13.7.0",
    ],
    extras_require={
        "dev": [
            "pytest>=8.2.0",
            "black>=24.4.0",
            "isort>=5.13.0",
        ],
        "tracing": [
            "ddtrace>=2.10.0",
        ],
    },
    entry_points={
        "console_scripts": [
            "bandit-lab=main:app",
        ],
    },
)
