from setuptools import find_packages, setup

setup(
    name="edmkit",
    version="0.1.0",
    description="Cost-sensitive early classification of time series",
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    install_requires=[
        "numpy",
        "joblib",
        "python-dotenv",
        "pyyaml",
        "questionary",
    ],
    extras_require={"dev": ["pytest"]},
    entry_points={
        "console_scripts": [
            "edm=edmkit.main:main",
        ],
    },
    classifiers=[
        "Programming Language :: Python :: 3",
        "Operating System :: OS Independent",
    ],
    python_requires=">=3.9",
)
