"""Simulation of entanglement purification protocols built on scrambling permutations."""

from .bounds import predictions_for
from .protocols import (
    GeppParams,
    OutcomeDistribution,
    complete_scrambling,
    hash_and_compare,
    random_permutation_protocol,
    sample_runs,
    simple_scrambling,
)
from .qstate import Ensemble, SparseState, fidelity, max_entangled
from .scramble import build as build_scramble
from .scramble import verify_scrambling

__all__ = [
    "Ensemble",
    "GeppParams",
    "OutcomeDistribution",
    "SparseState",
    "build_scramble",
    "complete_scrambling",
    "fidelity",
    "hash_and_compare",
    "max_entangled",
    "predictions_for",
    "random_permutation_protocol",
    "sample_runs",
    "simple_scrambling",
    "verify_scrambling",
]
