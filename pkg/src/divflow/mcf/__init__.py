from .network import (
    FlowNetwork,
    FlowSolution,
    NetworkBuilder,
    fix_arc_flow,
    read_dimacs,
    write_dimacs,
)
from .solver import CertificateError, solve_min_cost_flow, verify_solution

__all__ = [
    "CertificateError",
    "FlowNetwork",
    "FlowSolution",
    "NetworkBuilder",
    "fix_arc_flow",
    "read_dimacs",
    "solve_min_cost_flow",
    "verify_solution",
    "write_dimacs",
]
