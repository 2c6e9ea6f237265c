"""Assisted entanglement distillation rate bounds for multipartite states.

Entropic rate bounds (hashing, L, min-cut coherent information, hierarchical
chain rates), helper measurements, and Haar-random decoupling experiments on
typical subspaces.
"""

from eoa.config import settings
from eoa.errors import EOAError
from eoa.qstate import MultiState, Register, RoleMap, example_state

__all__ = ["EOAError", "MultiState", "Register", "RoleMap", "example_state", "settings"]
__version__ = "0.1.0"
