"""Layers, optimizers, and checkpoints."""
from .checkpoint import CheckpointCorrupt, load_checkpoint, save_checkpoint
from .layers import (ConstraintLayer, Linear, Module, ReLU, Sequential, Sigmoid,
                     box_scale, general_polyhedron_combine)
from .gradsuite import run_gradcheck_suite
from .optim import Adam, AdamState, PlateauScheduler, adam_step, scheduler_step

__all__ = [
    "CheckpointCorrupt", "load_checkpoint", "save_checkpoint", "ConstraintLayer",
    "Linear", "Module", "ReLU", "Sequential", "Sigmoid", "box_scale",
    "general_polyhedron_combine", "Adam", "AdamState", "PlateauScheduler",
    "adam_step", "scheduler_step", "run_gradcheck_suite",
]
