from .backend import BACKEND_NAME, kernels
from .checkpoint import load_arrays, load_store, save_arrays, save_store
from .graph import ComputeGraph, GraphError, Node, as_array
from .optim import ParamStore, adam_step, clip_global_norm

__all__ = [
    "BACKEND_NAME",
    "kernels",
    "ComputeGraph",
    "GraphError",
    "Node",
    "as_array",
    "ParamStore",
    "adam_step",
    "clip_global_norm",
    "save_arrays",
    "load_arrays",
    "save_store",
    "load_store",
]
