"""Setup file for the abr_rashomon project."""

from setuptools import setup  # noqa: D100

setup()
