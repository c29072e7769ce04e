"""Shared-trip parcel delivery with personal and dedicated vehicles."""
from .dh import DhConfig, DhTrace, incumbent_gap, solve_dh
from .domain import (CostBreakdown, CostParams, DvPlan, DvSpec, Instance, Pdo, Solution, Spv, SpvPlan,
                     total_objective, validate_solution)
from .errors import (CapacityError, ContractError, CrowdshipError, GenerationError, InfeasibleInstanceError,
                     NoPathError, ParseError, UnknownArcError)
from .kernels import BACKEND
from .net_graph import Arc, CostModel, Network, VehicleClass
from .oracle import OracleLimits, solve_exact_bruteforce
from .scenario import GenSpec, generate_instance, load_instance, save_instance

__version__ = "0.1.0"

__all__ = [
    "Arc", "BACKEND", "CapacityError", "ContractError", "CostBreakdown", "CostModel", "CostParams",
    "CrowdshipError", "DhConfig", "DhTrace", "DvPlan", "DvSpec", "GenSpec", "GenerationError",
    "InfeasibleInstanceError", "Instance", "Network", "NoPathError", "OracleLimits", "ParseError", "Pdo",
    "Solution", "Spv", "SpvPlan", "UnknownArcError", "VehicleClass", "generate_instance", "incumbent_gap",
    "load_instance", "save_instance", "solve_dh", "solve_exact_bruteforce", "total_objective",
    "validate_solution",
]
