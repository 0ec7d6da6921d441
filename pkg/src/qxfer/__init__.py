"""Entanglement transfer between coupled quantum subsystems.

Exact unitary dynamics of a small system A coupled to an environment B,
side by side with first-order perturbation theory, plus the experiment
harness that measures decay times and information transfer rates.
"""
from .qcore import (
    SpectralDecomposition,
    eig_decompose,
    evolve,
    evolve_many,
    kron,
    mutual_information,
    partial_trace,
    von_neumann_entropy,
)
from .model import (
    ModelInstance,
    PathwaySpec,
    SubsystemSpec,
    assemble_model,
    haar_unitary,
    initial_entangled_state,
    paper_figure_model,
)

__version__ = "0.1.0"
