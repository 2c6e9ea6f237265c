"""Global numerical settings.

``tol`` is the single overridable tolerance; ``log_base`` switches entropies
between bits (2) and nats (e) for cross-checks.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass


@dataclass
class Settings:
    tol: float = 1e-9
    log_base: float = 2.0
    eig_method: str = "lapack"
    rank_cutoff: float = 1e-12
    max_helpers: int = 20
    max_dim: int = 2**20

    def log(self, x):
        return math.log(x) / math.log(self.log_base)


settings = Settings()


@contextlib.contextmanager
def override(**kwargs):
    """Temporarily change fields of the global settings."""
    old = {k: getattr(settings, k) for k in kwargs}
    for k, v in kwargs.items():
        if not hasattr(settings, k):
            raise AttributeError(k)
        setattr(settings, k, v)
    try:
        yield settings
    finally:
        for k, v in old.items():
            setattr(settings, k, v)
