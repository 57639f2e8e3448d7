from setuptools import setup, find_packages

import pathlib

HERE = pathlib.Path(__file__).parent
README = (HERE / "README.md").read_text()

setup(
    name="blackchain",
    version="0.1",
    description="Simulator for V2X misbehavior reporting and revocation on a hierarchical blockchain",
    long_description=README,
    long_description_content_type="text/markdown",
    license="Apache License 2.0",
    classifiers=[
        "Intended Audience :: Science/Research",
        "Programming Language :: Python",
        "Topic :: Scientific/Engineering",
        "Topic :: Security :: Cryptography",
    ],
    packages=find_packages(exclude=["tests"]),
    install_requires=[
        "click",
        "cryptography",
        "joblib",
        "numpy",
        "pandas",
        "pytest",
        "python-dotenv",
        "pyyaml",
        "sqlalchemy>=1.4,<2",
    ],
    extras_require={
        "test": ["hypothesis"],
    },
    entry_points="""
        [console_scripts]
        blackchain=blackchain.cli.cli:blackchain
    """,
    include_package_data=True,
)
