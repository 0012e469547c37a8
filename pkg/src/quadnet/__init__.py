"""Quadratic-neuron networks trained from scratch, a sigmoid wavelet frame with
greedy N-term approximation, and sampled checks of the frame kernel conditions."""

from .core_math import Rng, rng_gaussian, sym_eigen
from .decision import FormClass, QuadraticForm, canonicalize, classify, evaluate
from .network import LayerSpec, Network, backward, build_network, init_network, network_forward
from .optimizer import AdamState, TrainConfig, TrainReport, adam_step, train

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "FormClass",
    "LayerSpec",
    "Network",
    "QuadraticForm",
    "Rng",
    "TrainConfig",
    "TrainReport",
    "adam_step",
    "backward",
    "build_network",
    "canonicalize",
    "classify",
    "evaluate",
    "init_network",
    "network_forward",
    "rng_gaussian",
    "sym_eigen",
    "train",
]
