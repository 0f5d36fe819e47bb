"""Model-adaptive generalized likelihood ratio tests.

This package tests parametric single-index regression models against
nonparametric alternatives that are smoothed only along an estimated
low-dimensional projection of the covariates. It can be used as a library
or through the ``adaglr`` command-line tool.
"""

__version__ = "1.0.0"
__author__ = "adaglr contributors"
