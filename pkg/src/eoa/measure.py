"""Helper measurements: POVMs, rank-one refinement, outcome ensembles.

Also the ensemble-averaged hashing rate, the exact assisted rate of
classical-quantum states, and the pure-ensemble convexity witness.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from eoa import densemat
from eoa.config import settings
from eoa.errors import (
    DecompositionMismatch,
    DimensionMismatch,
    InvalidPOVM,
    NotClassicalQuantum,
    UsageError,
)
from eoa.qstate import MultiState, Register, RoleMap
from eoa.rates import coherent_info, von_neumann

MIN_OUTCOME_PROB = 1e-12


@dataclass(frozen=True)
class POVM:
    system: tuple[str, ...]
    elements: tuple[np.ndarray, ...]

    def __post_init__(self):
        system = (self.system,) if isinstance(self.system, str) else tuple(self.system)
        object.__setattr__(self, "system", system)
        object.__setattr__(self, "elements", tuple(densemat.as_matrix(e) for e in self.elements))

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    def __len__(self) -> int:
        return len(self.elements)

    def validate(self, tol: float | None = None) -> "POVM":
        tol = settings.tol if tol is None else tol
        if not self.elements:
            raise InvalidPOVM("POVM has no elements")
        d = self.dim
        total = np.zeros((d, d), dtype=complex)
        for k, e in enumerate(self.elements):
            if e.shape != (d, d):
                raise InvalidPOVM(f"element {k} has shape {e.shape}, expected {(d, d)}")
            try:
                densemat.clamp_spectrum(densemat.eigvalsh(e), tol)
            except Exception as exc:
                raise InvalidPOVM(f"element {k} is not positive semidefinite: {exc}") from exc
            total += e
        err = np.max(np.abs(total - np.eye(d)))
        if err > tol:
            raise InvalidPOVM(f"elements sum to identity only within {err:.3g}")
        return self

    def is_rank_one(self) -> bool:
        return all(np.sum(densemat.psd_spectrum(e) > settings.rank_cutoff) <= 1 for e in self.elements)

    @classmethod
    def basis(cls, system, d: int, unitary=None) -> "POVM":
        """Projective measurement onto the columns of ``unitary`` (computational basis by default)."""
        u = np.eye(d, dtype=complex) if unitary is None else densemat.as_matrix(unitary)
        return cls(system, tuple(np.outer(u[:, k], u[:, k].conj()) for k in range(d)))

    def to_json(self) -> dict:
        sys = self.system[0] if len(self.system) == 1 else list(self.system)
        return {
            "system": sys,
            "elements": [[[[float(z.real), float(z.imag)] for z in row] for row in e] for e in self.elements],
        }

    @classmethod
    def from_json(cls, data: dict) -> "POVM":
        try:
            els = [np.array([[complex(z[0], z[1]) for z in row] for row in e]) for e in data["elements"]]
            return cls(data["system"], tuple(els)).validate()
        except (KeyError, TypeError, IndexError, ValueError) as exc:
            raise UsageError(f"malformed POVM description: {exc}") from exc


def rank_one_refine(f: POVM) -> tuple[POVM, list[int]]:
    """Split every element into rank-one pieces ``lambda |a><a|``.

    Returns the refined POVM and the map from refined outcome index to the
    original outcome index.
    """
    f.validate()
    elements, grouping = [], []
    for x, e in enumerate(f.elements):
        eig = densemat.herm_eig(e)
        w = densemat.clamp_spectrum(eig.eigenvalues)
        for lam, vec in zip(w, eig.eigenvectors.T):
            if lam > settings.rank_cutoff:
                elements.append(lam * np.outer(vec, vec.conj()))
                grouping.append(x)
    return POVM(f.system, tuple(elements)), grouping


@dataclass(frozen=True)
class Outcome:
    index: int
    prob: float
    state: MultiState


@dataclass
class MeasurementEnsemble:
    outcomes: list[Outcome]
    discarded: float = 0.0
    notes: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.outcomes)

    @property
    def probs(self) -> np.ndarray:
        return np.array([o.prob for o in self.outcomes])

    def mixture(self) -> np.ndarray:
        return sum(o.prob * np.asarray(o.state.rho) for o in self.outcomes)

    def coarse_grain(self, grouping: Sequence[int]) -> "MeasurementEnsemble":
        """Merge outcomes that ``grouping`` sends to the same coarse index."""
        buckets: dict[int, list[Outcome]] = {}
        for o in self.outcomes:
            buckets.setdefault(grouping[o.index], []).append(o)
        merged = []
        for x in sorted(buckets):
            group = buckets[x]
            p = sum(o.prob for o in group)
            rho = sum(o.prob * np.asarray(o.state.rho) for o in group) / p
            merged.append(Outcome(x, p, MultiState(group[0].state.register, rho, validate=False)))
        return MeasurementEnsemble(merged, self.discarded)


def _split(s: MultiState, block: Sequence[str]) -> tuple[list[str], list[int], list[int]]:
    reg = s.register
    cidx = reg.indices(block)
    rest = [i for i in range(len(reg)) if i not in cidx]
    if not rest:
        raise UsageError("measuring every subsystem leaves nothing behind")
    return [reg.labels[i] for i in rest], cidx, rest


def measure_helper(s: MultiState, block=None, e: POVM | None = None) -> MeasurementEnsemble:
    """Measure ``block`` with POVM ``e``; outcome states live on the remaining subsystems.

    Outcomes with probability below 1e-12 are dropped and the remaining
    probabilities renormalised.
    """
    if e is None:
        raise UsageError("a POVM is required")
    block = list(e.system if block is None else ([block] if isinstance(block, str) else block))
    reg = s.register
    rest_labels, cidx, rest = _split(s, block)
    dc = reg.dim_of(block)
    if e.dim != dc:
        raise DimensionMismatch(f"POVM acts on dimension {e.dim}, block {block} has dimension {dc}")
    dims = reg.dims
    dr = reg.dim_of(rest_labels)
    rest_reg = Register(tuple(reg.systems[i] for i in rest))
    rank_one = s.ket is not None and e.is_rank_one()

    raw = []
    if s.ket is not None:
        m = s.ket.reshape(dims).transpose(cidx + rest).reshape(dc, dr)
        for x, ex in enumerate(e.elements):
            if rank_one:
                eig = densemat.herm_eig(ex)
                lam = max(eig.eigenvalues[0], 0.0)
                vec = np.sqrt(lam) * (eig.eigenvectors[:, 0].conj() @ m)
                p = float(np.vdot(vec, vec).real)
                raw.append((x, p, vec))
            else:
                rho_x = m.T @ ex.T @ m.conj()
                raw.append((x, float(np.trace(rho_x).real), rho_x))
    else:
        n = len(dims)
        t = np.asarray(s.rho).reshape(dims + dims)
        perm = cidx + rest + [n + i for i in cidx] + [n + i for i in rest]
        t = t.transpose(perm).reshape(dc, dr, dc, dr)
        for x, ex in enumerate(e.elements):
            rho_x = np.einsum("dc,crds->rs", ex, t)
            raw.append((x, float(np.trace(rho_x).real), rho_x))

    kept = [(x, p, obj) for x, p, obj in raw if p >= MIN_OUTCOME_PROB]
    total = sum(p for _, p, _ in kept)
    outcomes = []
    for x, p, obj in kept:
        if obj.ndim == 1:
            state = MultiState(rest_reg, ket=obj / np.sqrt(p), validate=False)
        else:
            rho = obj / p
            state = MultiState(rest_reg, 0.5 * (rho + rho.conj().T), validate=False)
        outcomes.append(Outcome(x, p / total, state))
    return MeasurementEnsemble(outcomes, discarded=max(0.0, 1.0 - total))


def avg_hashing_rate(ens: MeasurementEnsemble, a, b) -> float:
    """sum_x p_x max(0, I(A>B)) over the ensemble."""
    return float(sum(o.prob * max(0.0, coherent_info(o.state, a, b)) for o in ens.outcomes))


def cq_decompose(s: MultiState, roles: RoleMap, tol: float = 1e-9) -> list[tuple[float, MultiState]]:
    """Split a state that is block diagonal in the helper's computational basis.

    Raises NotClassicalQuantum when the off-block Frobenius mass exceeds
    ``tol`` or a block is not pure.
    """
    roles.validate(s.register)
    block = list(roles.helpers)
    if not block:
        raise NotClassicalQuantum("no helper system to treat as classical")
    reg = s.register
    rest_labels, cidx, rest = _split(s, block)
    dims = reg.dims
    n = len(dims)
    dc, dr = reg.dim_of(block), reg.dim_of(rest_labels)
    t = np.asarray(s.rho).reshape(dims + dims)
    perm = cidx + rest + [n + i for i in cidx] + [n + i for i in rest]
    t = t.transpose(perm).reshape(dc, dr, dc, dr)
    off = 0.0
    for c in range(dc):
        for c2 in range(dc):
            if c != c2:
                off += float(np.sum(np.abs(t[c, :, c2, :]) ** 2))
    if np.sqrt(off) > tol:
        raise NotClassicalQuantum(f"off-block mass {np.sqrt(off):.3g} exceeds {tol:.3g}")
    rest_reg = Register(tuple(reg.systems[i] for i in rest))
    parts = []
    for c in range(dc):
        blk = t[c, :, c, :]
        p = float(np.trace(blk).real)
        if p < MIN_OUTCOME_PROB:
            continue
        st = MultiState(rest_reg, blk / p, validate=False)
        if not st.is_pure(1e-8):
            raise NotClassicalQuantum(f"block {c} is not a pure state")
        parts.append((p, st))
    return parts


def cq_assistance(s: MultiState, roles: RoleMap) -> float:
    """Exact assisted rate sum_i p_i S(A)_{psi_i} of a cq state with pure blocks."""
    return float(sum(p * von_neumann(st, [roles.a]) for p, st in cq_decompose(s, roles)))


def convexity_witness(
    s: MultiState,
    decomposition: Sequence[tuple[float, MultiState]],
    e: POVM,
    roles: RoleMap,
) -> tuple[float, float]:
    """Both sides of the pure-ensemble convexity inequality for a rank-one POVM on the helper.

    ``lhs = sum_x q_x D(psi_x)`` with D evaluated through the hashing bound
    (exact on pure outcomes); ``rhs = sum_{x,i} p_i Tr[E_x psi_i^C] S(A)`` of
    the refined pure outcomes. ``lhs <= rhs`` must hold.
    """
    if not e.is_rank_one():
        raise UsageError("convexity witness needs a rank-one POVM")
    probs = np.array([p for p, _ in decomposition], dtype=float)
    mix = sum(p * np.asarray(st.rho) for p, st in decomposition)
    if abs(probs.sum() - 1.0) > 1e-8 or np.max(np.abs(mix - np.asarray(s.rho))) > 1e-8:
        raise DecompositionMismatch("decomposition does not mix to the given state")
    a, b = [roles.a], [roles.b]
    block = list(e.system)
    lhs = avg_hashing_rate(measure_helper(s, block, e), a, b)
    rhs = 0.0
    for p_i, st in decomposition:
        if not st.is_pure(1e-8):
            raise DecompositionMismatch("decomposition states must be pure")
        ens = measure_helper(st, block, e)
        rhs += p_i * sum(o.prob * von_neumann(o.state, a) for o in ens.outcomes)
    return lhs, rhs
