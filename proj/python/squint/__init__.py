"""Squint, iProd and Component iProd for experts and combinatorial games."""
import json as _json

from . import _squint
from ._squint import (  # noqa: F401
    ComponentIProd as _ComponentIProd,
    InfeasiblePoint,
    ProjectionError,
    binary_relative_entropy,
    bound_component,
    bound_conjugate,
    bound_cv,
    bound_improper,
    erf,
    grid,
    grid_size,
    hedge_weights,
    log_xi,
    potential,
    squint_weights,
    xi,
)


def _text(spec):
    return spec if isinstance(spec, str) else _json.dumps(spec)


def project(concept_class, u_tilde):
    return _squint.project(_text(concept_class), list(u_tilde))


def decompose(concept_class, u):
    """Returns (concepts, weights)."""
    return _squint.decompose(_text(concept_class), list(u))


def enumerate_vertices(concept_class, cap=100000):
    return _squint.enumerate_vertices(_text(concept_class), cap)


def component_iprod(concept_class, prior, T_max):
    return _ComponentIProd(_text(concept_class), list(prior), T_max)


def run_experiment(config):
    """Returns (csv_text, summary_dict)."""
    csv, summary = _squint.run_experiment(_text(config))
    return csv, _json.loads(summary)


def audit_csv(csv, config=None):
    """Returns (rows, checks, failures)."""
    return _squint.audit_csv(csv, "" if config is None else _text(config))
