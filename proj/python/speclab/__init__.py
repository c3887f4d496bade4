"""Finite-volume random Schrodinger operators.

Thin Python layer over the C++ core: domains and Hamiltonians, one-parameter
coupling families, spectral averages, the spectral shift, Monte Carlo local
DOS estimates, the explicit constants, and the suite runner.
"""

import json
import os

from . import _speclab
from ._speclab import (
    ConfigError,
    ConvergenceError,
    Domain,
    Family,
    InvariantViolation,
    PreconditionError,
    crossings,
    disorder,
    hamiltonian,
    laplacian,
    ldos_function,
    ldos_measure,
    random_family,
    site_family,
    spectral_average,
    spectral_average_full_line,
    spectral_shift,
    ssf_trace_difference,
)

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "Domain",
    "Family",
    "InvariantViolation",
    "PreconditionError",
    "constants",
    "crossings",
    "disorder",
    "hamiltonian",
    "laplacian",
    "ldos_function",
    "ldos_measure",
    "random_family",
    "run",
    "site_family",
    "spectral_average",
    "spectral_average_full_line",
    "spectral_shift",
    "ssf_trace_difference",
]


def constants(d, b, energy=0.0, n=0, kappa=1.0, rho_sup=1.0, m=0):
    """E0, c(b, d), C_W and K1 as a dict. m > 0 uses discrete cube levels."""
    return json.loads(_speclab.constants_json(d, b, energy, n, kappa, rho_sup, m))


def run(config, workers=None, verbose=False):
    """Run suites from a config dict or a path to a JSON file; returns the summary dict."""
    if isinstance(config, (str, os.PathLike)):
        with open(config) as f:
            config = json.load(f)
    return json.loads(_speclab.run_json(json.dumps(config), workers, verbose))
