"""vecop: allocates vehicle-originated processing demand across vehicle,
edge, and cloud processors to minimize weighted power plus maximum service
delay, with an exact solver, an independent evaluator, and a sweep harness."""

from . import cli, delaymodel, formulation, harness, linkmodel, lp_io, powermodel, scenario, solver

__all__ = [
    "cli",
    "delaymodel",
    "formulation",
    "harness",
    "linkmodel",
    "lp_io",
    "powermodel",
    "scenario",
    "solver",
]

__version__ = "0.1.0"
