"""Gibbs sweep, loosely connected copies, Q-extensions and the interpolation process."""

from .interpolation import MainLemmaReport, Trace, TraceRecord, main_lemma_check, markov_extend, run_interpolation
from .joint import (
    GaussianJoint,
    GridJoint,
    QExtension,
    d_functional,
    diagonal_pair,
    grid_conditionals,
    loosely_connected_copy,
    q_extension,
    q_extension_map,
)
from .sweep import FixedPoint, contraction_check, fixed_point, gibbs_grid, markov_step_G, sweep_matrices
from .toy import ToyProcess, aux_theorem_bruteforce, random_toy_process

__all__ = [
    "GaussianJoint",
    "GridJoint",
    "QExtension",
    "diagonal_pair",
    "loosely_connected_copy",
    "q_extension",
    "q_extension_map",
    "d_functional",
    "grid_conditionals",
    "markov_extend",
    "sweep_matrices",
    "gibbs_grid",
    "markov_step_G",
    "contraction_check",
    "fixed_point",
    "FixedPoint",
    "Trace",
    "TraceRecord",
    "run_interpolation",
    "main_lemma_check",
    "MainLemmaReport",
    "ToyProcess",
    "random_toy_process",
    "aux_theorem_bruteforce",
]
