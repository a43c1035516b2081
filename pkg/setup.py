from setuptools import setup, find_packages

setup(
    name="rsp-feedback-toolkit",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "examples*"]),
    install_requires=[
        "numpy",
        "pandas",
        "scipy",
        "pydantic",
        "python-dotenv",
    ],
)
