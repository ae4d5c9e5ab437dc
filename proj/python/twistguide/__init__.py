"""Floquet-Bloch bands and eigenvalue counting for periodically twisted waveguides."""

import json as _json

from . import _core
from ._core import ConfigError, TwistguideError, __version__, config_schema, format_number, report_schema

__all__ = [
    "ConfigError",
    "TwistguideError",
    "__version__",
    "bs_count",
    "config_schema",
    "count_below",
    "count_curve",
    "format_number",
    "report_schema",
    "run",
    "run_check",
    "semiclassical_count",
    "sweep_bands",
    "transverse_eigenvalues",
]


def _text(value):
    return value if isinstance(value, str) else _json.dumps(value)


def transverse_eigenvalues(cross_section, count):
    """Lowest eigenvalues of the discrete Dirichlet Laplacian of a cross-section."""
    return _core.transverse_eigenvalues(_text(cross_section), count)


def sweep_bands(cross_section, twist=0.0, bands=4, n_k=16, ell_max=4):
    """Band functions on the grid k = -1/2 + i/n_k; returns (k, E) with E[i, l]."""
    return _core.sweep_bands(_text(cross_section), _text(twist), bands, n_k, ell_max)


def count_curve(perturbation, lambda_min, lambda_max, points, mu=1.0, coefficient=1.0, eta=None):
    """Counts below -lambda of -mu d^2/dx^2 - coefficient * eta * eps on a descending log grid."""
    lambdas, counts, converged = _core.count_curve(
        mu, coefficient, _text(perturbation), "" if eta is None else _text(eta), lambda_min, lambda_max, points
    )
    return {"lambda": lambdas, "count": counts, "converged": converged}


def count_below(perturbation, lambda_, mu=1.0, coefficient=1.0, eta=None):
    """Converged count of eigenvalues below -lambda; returns (count, converged)."""
    return _core.count_below(mu, coefficient, _text(perturbation), "" if eta is None else _text(eta), lambda_)


def semiclassical_count(perturbation, lambda_, mu=1.0, coefficient=1.0):
    return _core.semiclassical_count(mu, coefficient, _text(perturbation), lambda_)


def bs_count(perturbation, lambda_, mu=1.0, coefficient=1.0, eta=None):
    """Birman-Schwinger count at threshold 1; returns (count, converged)."""
    return _core.bs_count(mu, coefficient, _text(perturbation), "" if eta is None else _text(eta), lambda_)


def run(config, stages=None, output_dir=None):
    """Runs pipeline stages and returns the report; files are written only when output_dir is given."""
    return _json.loads(_core.run(_text(config), list(stages or []), "" if output_dir is None else str(output_dir)))


def run_check(params):
    """Runs one verification check; returns its result record."""
    return _json.loads(_core.run_check(_text(params)))
