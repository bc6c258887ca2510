"""
SIRM-ROM: subspace iteration using reduced models.

A reduced-order-modeling toolkit implementing global and time-partitioned (local) subspace
iteration, the DIRM baseline, and the finite-difference benchmarks used to exercise them.
"""

__version__ = "1.0.0"
__author__ = "SIRM-ROM Team"
__description__ = "Subspace iteration using reduced models, with finite-difference benchmarks"
