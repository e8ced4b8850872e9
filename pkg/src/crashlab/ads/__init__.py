"""Modular ego driver: perception, prediction, planning, and control."""

from .graph import MODULES, CHANNELS, ModuleGraph, extract_module_graph
from .params import build_parameter_specs, default_configuration

__all__ = [
    "MODULES",
    "CHANNELS",
    "ModuleGraph",
    "extract_module_graph",
    "build_parameter_specs",
    "default_configuration",
]
