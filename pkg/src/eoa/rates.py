"""Entropic quantities and assisted-distillation rate bounds.

All entropies are in bits unless ``settings.log_base`` is changed. Raw
coherent informations are signed; only the quantities named ``bound`` or
``rate`` are clipped at zero.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from eoa import densemat
from eoa.config import settings
from eoa.errors import OverlappingSystems, TooManyHelpers, UsageError
from eoa.qstate import MultiState, RoleMap, partial_trace, reduced_matrix

DEGENERACY_TOL = 1e-6
# serialized values this small are round-off, printed as 0
DISPLAY_ZERO = 1e-12


@dataclass
class RateReport:
    quantities: dict[str, float] = field(default_factory=dict)
    minimizing_cut: list[str] | None = None
    notes: list[str] = field(default_factory=list)
    cuts: list[tuple[list[str], float]] = field(default_factory=list)

    def __getitem__(self, key: str) -> float:
        return self.quantities[key]

    def to_json(self, digits: int = 9) -> dict:
        out: dict = {"quantities": {k: _sig(v, digits) for k, v in self.quantities.items()}}
        if self.minimizing_cut is not None:
            out["minimizingCut"] = list(self.minimizing_cut)
        if self.cuts:
            out["cuts"] = [{"T": list(t), "value": _sig(v, digits)} for t, v in self.cuts]
        out["notes"] = list(self.notes)
        return out

    def to_csv(self, digits: int = 9) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["name", "value"])
        for k, v in self.quantities.items():
            writer.writerow([k, _sig(v, digits)])
        return buf.getvalue()


def _sig(x, digits: int = 9):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    x = float(x)
    if abs(x) < DISPLAY_ZERO:
        return 0.0
    if not math.isfinite(x):
        return x
    return float(f"{x:.{digits}g}")


def entropy_of(rho) -> float:
    """Von Neumann entropy of a density matrix, with 0 log 0 = 0."""
    w = densemat.psd_spectrum(rho)
    w = w[w > 0.0]
    return float(-np.sum(w * np.log(w)) / math.log(settings.log_base))


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -(p * settings.log(p) + (1 - p) * settings.log(1 - p))


def _labels(x) -> list[str]:
    return [x] if isinstance(x, str) else list(x)


def von_neumann(s: MultiState, subsystems) -> float:
    """S(subsystems) of ``s``."""
    keep = _labels(subsystems)
    if not keep:
        raise UsageError("entropy needs at least one subsystem")
    reg = s.register
    idx = set(reg.indices(keep))
    if s.ket is not None:
        rest = [lab for i, lab in enumerate(reg.labels) if i not in idx]
        if not rest:
            return 0.0
        # pure state: both marginals share a spectrum, diagonalise the smaller one
        if reg.dim_of(rest) < reg.dim_of(keep):
            keep = rest
    return entropy_of(reduced_matrix(s, keep))


def _disjoint(x: list[str], y: list[str]) -> None:
    if not x or not y:
        raise UsageError("both system groups must be nonempty")
    overlap = set(x) & set(y)
    if overlap:
        raise OverlappingSystems(f"systems appear on both sides: {sorted(overlap)}")


def coherent_info(s: MultiState, x, y) -> float:
    """I(X>Y) = S(Y) - S(XY)."""
    x, y = _labels(x), _labels(y)
    _disjoint(x, y)
    return von_neumann(s, y) - von_neumann(s, x + y)


def conditional_entropy(s: MultiState, x, y) -> float:
    """S(X|Y) = S(XY) - S(Y)."""
    x, y = _labels(x), _labels(y)
    _disjoint(x, y)
    return von_neumann(s, x + y) - von_neumann(s, y)


def hashing_bound(s: MultiState, a, b) -> float:
    return max(0.0, coherent_info(s, a, b))


def _abc(s: MultiState, roles: RoleMap) -> tuple[list[str], list[str], list[str]]:
    if roles.a is None or roles.b is None:
        raise UsageError("roles must name both recipients a and b")
    roles.validate(s.register)
    return [roles.a], [roles.b], list(roles.helpers)


def assisted_lower_bound(s: MultiState, roles: RoleMap) -> RateReport:
    """I(A>B), I(AC>B), I(A>BC), L = min of the last two, and max{I(A>B), L} clipped at 0.

    All helpers are treated as one block C. The purifying reference R is
    never needed explicitly: S(R) = S(ABC) and S(AR) = S(BC).
    """
    a, b, c = _abc(s, roles)
    s_b = von_neumann(s, b)
    s_ab = von_neumann(s, a + b)
    i_ab = s_b - s_ab
    report = RateReport()
    q = report.quantities
    q["I(A>B)"] = i_ab
    if c:
        s_abc = von_neumann(s, a + b + c)
        s_bc = von_neumann(s, b + c)
        q["I(AC>B)"] = s_b - s_abc
        q["I(A>BC)"] = s_bc - s_abc
        q["L"] = min(q["I(AC>B)"], q["I(A>BC)"])
        if abs(s_ab - s_abc) < DEGENERACY_TOL:
            report.notes.append("degenerate: S(AB) and S(R) coincide within 1e-6")
        if abs(s_bc - s_b) < DEGENERACY_TOL:
            report.notes.append("degenerate: S(AR) and S(B) coincide within 1e-6")
    else:
        q["I(AC>B)"] = q["I(A>BC)"] = q["L"] = i_ab
    q["bound"] = max(0.0, i_ab, q["L"])
    return report


@dataclass(frozen=True)
class HashingTest:
    beats: bool
    coherent_c_ab: float
    cond_a_bc: float
    cond_a_b: float


def beats_hashing(s: MultiState, roles: RoleMap, tol: float | None = None) -> HashingTest:
    """Sufficient test for L > I(A>B): I(C>AB) > 0 and S(A|BC) < S(A|B)."""
    tol = settings.tol if tol is None else tol
    a, b, c = _abc(s, roles)
    if not c:
        return HashingTest(False, 0.0, conditional_entropy(s, a, b), conditional_entropy(s, a, b))
    i_c_ab = coherent_info(s, c, a + b)
    s_a_bc = conditional_entropy(s, a, b + c)
    s_a_b = conditional_entropy(s, a, b)
    beats = i_c_ab > tol and s_a_bc < s_a_b - tol
    return HashingTest(bool(beats), i_c_ab, s_a_bc, s_a_b)


def enumerate_cuts(helpers: Sequence[str]) -> list[tuple[str, ...]]:
    """All subsets of ``helpers``, by increasing size then lexicographic helper index."""
    out = []
    for k in range(len(helpers) + 1):
        out.extend(itertools.combinations(helpers, k))
    return out


def _guard(helpers: Sequence[str]) -> None:
    if len(helpers) > settings.max_helpers:
        raise TooManyHelpers(f"{len(helpers)} helpers exceed the 2^m enumeration guard of {settings.max_helpers}")


def _argmin_cuts(values: list[tuple[tuple[str, ...], float]], report: RateReport, tie_tol: float) -> float:
    best = min(v for _, v in values)
    ties = [t for t, v in values if v <= best + tie_tol]
    report.minimizing_cut = list(ties[0])
    if len(ties) > 1:
        report.notes.append("tied cuts: " + "; ".join("{" + ",".join(t) + "}" for t in ties))
    return best


def min_cut_coherent_info(s: MultiState, roles: RoleMap, tie_tol: float | None = None) -> RateReport:
    """Exact minimum of I(A T > B T') over all 2^m helper cuts T."""
    tie_tol = settings.tol if tie_tol is None else tie_tol
    a, b, helpers = _abc(s, roles)
    _guard(helpers)
    report = RateReport()
    i_ab = coherent_info(s, a, b)
    values = []
    for t in enumerate_cuts(helpers):
        tc = [h for h in helpers if h not in t]
        values.append((t, coherent_info(s, a + list(t), b + tc)))
    report.cuts = [(list(t), v) for t, v in values]
    icmin = _argmin_cuts(values, report, tie_tol)
    report.quantities["I(A>B)"] = i_ab
    report.quantities["Icmin"] = icmin
    report.quantities["bound"] = max(0.0, i_ab, icmin)
    return report


def cut_upper_bound_report(s: MultiState, roles: RoleMap, tie_tol: float | None = None) -> RateReport:
    """min over cuts of the entanglement-entropy relaxation min{S(A T), S(B T')}.

    For a pure global state both entries agree and the value is exactly
    ``min_T S(A T)``; for mixed states it only upper-bounds the distillable
    entanglement across each cut.
    """
    tie_tol = settings.tol if tie_tol is None else tie_tol
    a, b, helpers = _abc(s, roles)
    _guard(helpers)
    report = RateReport()
    pure = s.is_pure()
    values = []
    for t in enumerate_cuts(helpers):
        tc = [h for h in helpers if h not in t]
        left = von_neumann(s, a + list(t))
        values.append((t, left if pure else min(left, von_neumann(s, b + tc))))
    report.cuts = [(list(t), v) for t, v in values]
    report.quantities["upper"] = _argmin_cuts(values, report, tie_tol)
    if not pure:
        report.notes.append("relaxation: entanglement-entropy bound per cut; D itself is not computed")
    return report


@dataclass(frozen=True)
class Link:
    state: MultiState
    x: tuple[str, ...]
    y: tuple[str, ...]

    def coherent_info(self) -> float:
        return coherent_info(self.state, list(self.x), list(self.y))


def links_from_state(s: MultiState, pairs: Iterable[tuple]) -> list[Link]:
    """Cut a global state into bipartite links by partial trace."""
    links = []
    for x, y in pairs:
        x, y = tuple(_labels(x)), tuple(_labels(y))
        links.append(Link(partial_trace(s, list(x) + list(y)), x, y))
    return links


def chain_link_values(links: Sequence[Link]) -> list[float]:
    if not links:
        raise UsageError("a chain needs at least one link")
    return [link.coherent_info() for link in links]


def chain_hierarchical_rate(links: Sequence[Link]) -> float:
    """Hashing-then-swapping rate: min over links of I(x>y), clipped at 0."""
    return max(0.0, min(chain_link_values(links)))


def _eta(x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x <= 1.0 / math.e:
        return x - x * math.log2(x)
    return x + math.log2(math.e) / math.e


def fannes_bound(eps: float, dim: int) -> float:
    """Continuity bound eta(eps) log2(dim) on |S(rho) - S(sigma)| when ||rho - sigma||_1 <= eps."""
    if eps < 0:
        raise UsageError("eps must be nonnegative")
    return _eta(eps) * math.log2(dim)


def pure_collapse_value(s: MultiState, roles: RoleMap) -> float:
    """min_T S(A T): the assisted rate of a pure multipartite state."""
    a, _, helpers = _abc(s, roles)
    return min(von_neumann(s, a + list(t)) for t in enumerate_cuts(helpers))
