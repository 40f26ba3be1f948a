"""Exact SL_d(Z/qZ) arithmetic, Cayley graph diameters and generation certificates."""

import csv
import io
import json

from . import _core
from ._core import (
    BudgetError,
    ConfigError,
    Error,
    InheritanceFailure,
    InternalError,
    ModulusMismatch,
    NotAUnit,
    PreconditionError,
    TargetUnreachable,
    factorize,
    inv_mod,
    key_identity,
    sample_seed,
    solve_translation_pair,
)

__all__ = [
    "BudgetError", "ConfigError", "Error", "InheritanceFailure", "InternalError", "ModulusMismatch", "NotAUnit",
    "PreconditionError", "TargetUnreachable", "factorize", "inv_mod", "key_identity", "sample_seed",
    "solve_translation_pair", "group_order", "check_seed", "decompose", "verify_decomposition", "diameter_scan",
    "distance", "evaluate", "surjective", "certify", "SL2_TU",
]

SL2_TU = {"kind": "SL", "dims": [2], "generators": [[[1, 1], [0, 1]], [[1, 0], [1, 1]]], "close_symmetric": True}


def _spec(spec):
    return spec if isinstance(spec, str) else json.dumps(spec)


def group_order(kind, dims, q):
    return int(_core.group_order(kind, list(dims), q))


def check_seed(g, q, L, variant="lower"):
    return json.loads(_core.check_seed(g, q, L, variant))


def decompose(target, g0, g0p, q, L):
    return json.loads(_core.decompose(target, g0, g0p, q, L))


def verify_decomposition(certificate):
    return _core.verify_decomposition(json.dumps(certificate))


def diameter_scan(spec, qs, budget=2 << 30, threads=1):
    """Rows as dicts plus the summary dict."""
    text, summary = _core.diameter_scan(_spec(spec), list(qs), budget, threads)
    return list(csv.DictReader(io.StringIO(text))), json.loads(summary)


def distance(spec, q, target):
    return _core.distance(_spec(spec), q, json.dumps(target))


def evaluate(spec, q, word):
    return json.loads(_core.evaluate(_spec(spec), q, list(word)))


def surjective(spec, q, budget=2 << 30):
    return _core.surjective(_spec(spec), q, budget)


def certify(spec, q, L, target=None, max_vertices=1 << 20):
    return json.loads(_core.certify(_spec(spec), q, L, None if target is None else json.dumps(target), max_vertices))
