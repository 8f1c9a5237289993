"""Merit functions, slopes and certified error bounds for strong vector equilibrium problems.

Find x in K with f(x, z) in C for every z in K. The merit
nu(x) = sup_{z in K} dist(f(x, z), C) vanishes on K exactly at solutions;
the modules below estimate it, its slopes and subdifferentials, and turn
those estimates into bounds dist(x, Solv) <= merit(x) / constant.
"""

from .config import RunConfig
from .model import ProblemInstance, named_problem, example_1, example_2

__version__ = "0.1.0"

__all__ = ["RunConfig", "ProblemInstance", "named_problem", "example_1",
           "example_2", "__version__"]
