from setuptools import setup, find_packages

setup(
    name="onebitmiso",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*"]),
    install_requires=[
        "numpy>=1.26",
        "scipy>=1.11",
        "pandas>=2.2.2",
        "python-dotenv>=1.0.1",
        "orjson>=3.10.7",
        "pydantic>=2.7.4",
    ],
    extras_require={
        "test": ["pytest>=8.0"],
    },
    entry_points={
        "console_scripts": ["onebit-miso=onebitmiso.cli:main"],
    },
    python_requires=">=3.9",
)
