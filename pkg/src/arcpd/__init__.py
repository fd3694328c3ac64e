"""Quickest change-point detection for AR(1) observations.

CUSUM and Shiryaev-Roberts detectors, Kullback-Leibler detectability
analysis, and a reproducible Monte Carlo harness for ARL / ADD / SADD
estimation and threshold calibration.

Submodules are imported lazily so that ``NUMBA_NUM_THREADS`` can still be
set by the command line front end before numba is loaded.
"""

__version__ = "0.1.0"
