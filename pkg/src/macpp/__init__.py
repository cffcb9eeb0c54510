"""Multilayer adjusted cluster point processes for multitype spatial patterns."""
__version__ = "0.1.0"

from .geometry import ConvexPolygon, Rectangle, convex_hull, unit_square
from .inference import McmcConfig, PosteriorSamples, fit, run_chains
from .likelihood import log_likelihood
from .model import ModelGraph, ParamVector, Role, biofilm_graph
from .patterns import MultitypePattern, read_pattern_csv, write_pattern_csv
from .priors import PriorSpec
from .simulate import SCENARIOS, get_scenario, simulate_pattern

__all__ = [
    "ConvexPolygon", "Rectangle", "convex_hull", "unit_square",
    "McmcConfig", "PosteriorSamples", "fit", "run_chains", "log_likelihood",
    "ModelGraph", "ParamVector", "Role", "biofilm_graph",
    "MultitypePattern", "read_pattern_csv", "write_pattern_csv",
    "PriorSpec", "SCENARIOS", "get_scenario", "simulate_pattern",
]
