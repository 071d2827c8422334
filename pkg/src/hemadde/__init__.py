"""Simulation and stability analysis of a two-compartment hematopoiesis model
with a distributed cell-cycle delay."""
from .kernel import DivisionDensity, KernelMoments
from .model import Equilibrium, HillRate, ModelParams, equilibria, existence
from .simulation import RunSpec, run, simulate
from .trajectory import Trajectory

__all__ = ["DivisionDensity", "KernelMoments", "Equilibrium", "HillRate", "ModelParams",
           "equilibria", "existence", "RunSpec", "run", "simulate", "Trajectory"]
__version__ = "0.1.0"
