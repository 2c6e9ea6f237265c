"""Multipartite registers and states.

Subsystems are ordered row-major: the first label of a register is the most
significant tensor index, so the basis ket ``|x1 x2 ... xk>`` sits at flat
index ``((x1 * d2 + x2) * d3 + ...) + xk``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from eoa import densemat
from eoa.config import settings
from eoa.errors import (
    DimensionMismatch,
    LabelClash,
    NotUnitary,
    StateInvariantError,
    UnknownExample,
    UnknownLabel,
    UsageError,
)

CNOT = np.array(
    [
        [1, 0, 0, 0],
        [0, 1, 0, 0],
        [0, 0, 0, 1],
        [0, 0, 1, 0],
    ],
    dtype=complex,
)


@dataclass(frozen=True)
class Register:
    systems: tuple[tuple[str, int], ...]

    def __post_init__(self):
        systems = tuple((str(label), int(dim)) for label, dim in self.systems)
        object.__setattr__(self, "systems", systems)
        labels = [label for label, _ in systems]
        if len(set(labels)) != len(labels):
            raise LabelClash(f"duplicate labels in register: {labels}")
        for label, dim in systems:
            if dim < 1:
                raise UsageError(f"subsystem {label!r} has dimension {dim}")

    @classmethod
    def of(cls, *pairs: tuple[str, int]) -> "Register":
        return cls(tuple(pairs))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.systems)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.systems)

    @property
    def dim(self) -> int:
        return math.prod(self.dims)

    def __len__(self) -> int:
        return len(self.systems)

    def __contains__(self, label) -> bool:
        return label in self.labels

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownLabel(f"unknown subsystem {label!r}; register has {list(self.labels)}") from None

    def indices(self, labels: Iterable[str]) -> list[int]:
        return [self.index(label) for label in labels]

    def dim_of(self, labels: Iterable[str]) -> int:
        return math.prod(self.dims[i] for i in self.indices(labels))

    def sub(self, labels: Iterable[str]) -> "Register":
        """Sub-register in the original order of this register."""
        wanted = set(self.indices(labels))
        return Register(tuple(s for i, s in enumerate(self.systems) if i in wanted))

    def __add__(self, other: "Register") -> "Register":
        clash = set(self.labels) & set(other.labels)
        if clash:
            raise LabelClash(f"labels present in both registers: {sorted(clash)}")
        return Register(self.systems + other.systems)


@dataclass(frozen=True)
class RoleMap:
    a: str | None
    b: str | None
    helpers: tuple[str, ...] = ()
    reference: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "helpers", tuple(self.helpers))
        named = [lab for lab in (self.a, self.b, *self.helpers, self.reference) if lab is not None]
        if len(set(named)) != len(named):
            raise UsageError(f"roles must be disjoint: {named}")

    def validate(self, register: Register) -> "RoleMap":
        for label in (self.a, self.b, *self.helpers, self.reference):
            if label is not None:
                register.index(label)
        return self

    def to_json(self) -> dict:
        return {"a": self.a, "b": self.b, "helpers": list(self.helpers), "reference": self.reference}

    @classmethod
    def from_json(cls, data: dict) -> "RoleMap":
        try:
            return cls(data.get("a"), data.get("b"), tuple(data.get("helpers") or ()), data.get("reference"))
        except (KeyError, TypeError) as exc:
            raise UsageError(f"malformed roles object: {data!r}") from exc


def _apply_left(mat: np.ndarray, dims: Sequence[int], axes: Sequence[int], op: np.ndarray) -> np.ndarray:
    """Apply a square ``op`` (on subsystems ``axes``, in that order) to the rows of ``mat``."""
    cols = mat.shape[1]
    k = len(axes)
    t = np.moveaxis(mat.reshape(*dims, cols), list(axes), list(range(k)))
    shape = t.shape
    t = (op @ t.reshape(op.shape[1], -1)).reshape(shape)
    return np.moveaxis(t, list(range(k)), list(axes)).reshape(-1, cols)


class MultiState:
    """Density operator on a register.

    Pure states may be held as a ket; ``rho`` is then built on first access.
    Instances are treated as immutable.
    """

    def __init__(self, register: Register, rho=None, *, ket=None, validate: bool = True):
        if (rho is None) == (ket is None):
            raise ValueError("give exactly one of rho or ket")
        self.register = register
        d = register.dim
        if ket is not None:
            ket = np.asarray(ket, dtype=complex).reshape(-1)
            if ket.shape[0] != d:
                raise DimensionMismatch(f"ket has length {ket.shape[0]}, register dimension is {d}")
            ket.setflags(write=False)
            self._ket = ket
            if validate:
                norm = float(np.vdot(ket, ket).real)
                if abs(norm - 1.0) > settings.tol:
                    raise StateInvariantError(f"ket norm^2 is {norm:.12g}, expected 1")
        else:
            rho = densemat.as_matrix(rho)
            if rho.shape != (d, d):
                raise DimensionMismatch(f"rho has shape {rho.shape}, register dimension is {d}")
            rho.setflags(write=False)
            self._ket = None
            self.__dict__["rho"] = rho
            if validate:
                self._validate_rho(rho)

    @staticmethod
    def _validate_rho(rho: np.ndarray) -> None:
        densemat.check_hermitian(rho)
        tr = np.trace(rho).real
        if abs(tr - 1.0) > settings.tol:
            raise StateInvariantError(f"trace is {tr:.12g}, expected 1")
        densemat.clamp_spectrum(densemat.eigvalsh(rho))

    @classmethod
    def pure(cls, register: Register, amplitudes, normalize: bool = False) -> "MultiState":
        ket = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if normalize:
            ket = ket / np.linalg.norm(ket)
        return cls(register, ket=ket)

    @cached_property
    def rho(self) -> np.ndarray:
        m = np.outer(self._ket, self._ket.conj())
        m.setflags(write=False)
        return m

    @property
    def ket(self) -> np.ndarray | None:
        return self._ket

    @property
    def is_pure_ket(self) -> bool:
        return self._ket is not None

    @property
    def labels(self) -> tuple[str, ...]:
        return self.register.labels

    @property
    def dim(self) -> int:
        return self.register.dim

    def trace(self) -> float:
        if self._ket is not None:
            return float(np.vdot(self._ket, self._ket).real)
        return float(np.trace(self.rho).real)

    def spectrum(self) -> np.ndarray:
        if self._ket is not None:
            w = np.zeros(self.dim)
            w[0] = self.trace()
            return w
        return densemat.psd_spectrum(self.rho)

    def is_pure(self, tol: float | None = None) -> bool:
        tol = settings.tol if tol is None else tol
        if self._ket is not None:
            return True
        return abs(float(np.trace(self.rho @ self.rho).real) - 1.0) <= max(tol, 1e-8)

    def ptrace(self, keep: Iterable[str]) -> "MultiState":
        return partial_trace(self, keep)

    def __repr__(self) -> str:
        kind = "pure" if self._ket is not None else "mixed"
        return f"MultiState({kind}, {list(self.register.systems)})"


def tensor_product(a: MultiState, b: MultiState) -> MultiState:
    reg = a.register + b.register
    if a.ket is not None and b.ket is not None:
        return MultiState(reg, ket=np.kron(a.ket, b.ket), validate=False)
    return MultiState(reg, np.kron(a.rho, b.rho), validate=False)


def tensor_all(states: Sequence[MultiState]) -> MultiState:
    out = states[0]
    for s in states[1:]:
        out = tensor_product(out, s)
    return out


def reduced_matrix(s: MultiState, keep: Iterable[str]) -> np.ndarray:
    """Reduced density matrix on ``keep``, subsystems in register order."""
    keep = list(keep)
    if not keep:
        raise UsageError("partial trace needs at least one subsystem to keep")
    reg = s.register
    kept = sorted(set(reg.indices(keep)))
    traced = [i for i in range(len(reg)) if i not in kept]
    dims = reg.dims
    dk = math.prod(dims[i] for i in kept)
    dt = math.prod(dims[i] for i in traced)
    if s.ket is not None:
        m = s.ket.reshape(dims).transpose(kept + traced).reshape(dk, dt)
        return m @ m.conj().T
    n = len(dims)
    t = s.rho.reshape(dims + dims)
    perm = kept + traced + [n + i for i in kept] + [n + i for i in traced]
    t = t.transpose(perm).reshape(dk, dt, dk, dt)
    return np.einsum("ajbj->ab", t)


def partial_trace(s: MultiState, keep: Iterable[str]) -> MultiState:
    keep = list(keep)
    rho = reduced_matrix(s, keep)
    return MultiState(s.register.sub(keep), rho, validate=False)


def purify(s: MultiState, ref_label: str = "R") -> MultiState:
    """Eigen-purification ``sum_k sqrt(l_k) |v_k>|k>`` with reference dim = numerical rank."""
    if ref_label in s.register:
        raise LabelClash(f"reference label {ref_label!r} already in register")
    if s.ket is not None:
        return MultiState(s.register + Register.of((ref_label, 1)), ket=s.ket, validate=False)
    eig = densemat.herm_eig(s.rho)
    w = densemat.clamp_spectrum(eig.eigenvalues)
    rank = max(int(np.sum(w > settings.rank_cutoff)), 1)
    cols = eig.eigenvectors[:, :rank] * np.sqrt(w[:rank])
    ket = cols.reshape(-1)
    ket = ket / np.linalg.norm(ket)
    return MultiState(s.register + Register.of((ref_label, rank)), ket=ket, validate=False)


def apply_operator_rows(mat: np.ndarray, register: Register, on: Sequence[str], op: np.ndarray) -> np.ndarray:
    """``(op on `on`) @ mat`` for a matrix or vector whose rows are indexed by ``register``."""
    axes = register.indices(on)
    vec = mat.ndim == 1
    m = mat.reshape(-1, 1) if vec else mat
    out = _apply_left(m, register.dims, axes, op)
    return out.reshape(-1) if vec else out


def apply_local_unitary(s: MultiState, on: Sequence[str], u) -> MultiState:
    u = densemat.as_matrix(u)
    on = list(on)
    d_on = s.register.dim_of(on)
    if u.shape != (d_on, d_on):
        raise DimensionMismatch(f"unitary has shape {u.shape}, subsystems {on} have dimension {d_on}")
    if not densemat.is_unitary(u):
        raise NotUnitary("operator is not unitary within tolerance")
    reg = s.register
    if s.ket is not None:
        return MultiState(reg, ket=apply_operator_rows(s.ket, reg, on, u), validate=False)
    left = apply_operator_rows(np.asarray(s.rho), reg, on, u)
    rho = apply_operator_rows(left.conj().T, reg, on, u).conj().T
    return MultiState(reg, rho, validate=False)


def basis_ket(dims: Sequence[int], digits: Sequence[int]) -> np.ndarray:
    v = np.zeros(math.prod(dims), dtype=complex)
    v[np.ravel_multi_index(tuple(digits), tuple(dims))] = 1.0
    return v


def ket_from_terms(dims: Sequence[int], terms: dict[str, complex]) -> np.ndarray:
    """Build a ket from ``{"010": amp, ...}`` bit-string terms (row-major)."""
    v = np.zeros(math.prod(dims), dtype=complex)
    for bits, amp in terms.items():
        v += amp * basis_ket(dims, [int(c) for c in bits])
    return v


# --- built-in example library -------------------------------------------------

def _psi_ac1() -> MultiState:
    return MultiState.pure(
        Register.of(("A", 2), ("C1", 2)),
        ket_from_terms((2, 2), {"00": 0.5, "11": math.sqrt(3 / 4)}),
    )


def _psi_bc2r() -> MultiState:
    return MultiState.pure(
        Register.of(("B", 2), ("C2", 2), ("R", 2)),
        ket_from_terms((2, 2, 2), {"000": 1 / math.sqrt(2), "110": 0.5, "111": 0.5}),
    )


def factorized_chain() -> tuple[MultiState, RoleMap]:
    state = tensor_product(_psi_ac1(), _psi_bc2r())
    return state, RoleMap("A", "B", ("C1", "C2"), "R")


def cnot_corrupted() -> tuple[MultiState, RoleMap]:
    state, roles = factorized_chain()
    return apply_local_unitary(state, ["C1", "C2"], CNOT), roles


def maximally_entangled(m: int = 2, labels: tuple[str, str] = ("A", "B")) -> tuple[MultiState, RoleMap]:
    ket = np.eye(m, dtype=complex).reshape(-1) / math.sqrt(m)
    state = MultiState.pure(Register.of((labels[0], m), (labels[1], m)), ket)
    return state, RoleMap(labels[0], labels[1])


NAMED_AB_STATES = {
    "bell": lambda: ket_from_terms((2, 2), {"00": 1 / math.sqrt(2), "11": 1 / math.sqrt(2)}),
    "product": lambda: basis_ket((2, 2), (0, 0)),
}


def named_ab_ket(spec: str) -> np.ndarray:
    """Two-qubit pure state by name: ``bell``, ``product``, or ``theta:<radians>``."""
    if spec in NAMED_AB_STATES:
        return NAMED_AB_STATES[spec]()
    if spec.startswith("theta:"):
        t = float(spec.split(":", 1)[1])
        return ket_from_terms((2, 2), {"00": math.cos(t), "11": math.sin(t)})
    raise UnknownExample(f"unknown two-qubit state {spec!r}")


def cq_state(p: Sequence[float], ab_states: Sequence) -> tuple[MultiState, RoleMap]:
    """``sum_i p_i psi_i^{AB} (x) |i><i|^C`` from pure AB states (kets or pure MultiStates)."""
    p = np.asarray(p, dtype=float)
    if len(p) != len(ab_states) or len(p) < 1:
        raise UsageError("need one AB state per probability")
    if np.any(p < 0) or abs(p.sum() - 1.0) > settings.tol:
        raise StateInvariantError(f"probabilities must be nonnegative and sum to 1, got {p.tolist()}")
    kets = []
    for st in ab_states:
        if isinstance(st, MultiState):
            ab_reg = st.register
            st = st.ket if st.ket is not None else purify_check(st)
        else:
            ab_reg = Register.of(("A", 2), ("B", 2))
        kets.append(np.asarray(st, dtype=complex).reshape(-1))
    d_ab = kets[0].shape[0]
    if any(k.shape[0] != d_ab for k in kets):
        raise DimensionMismatch("AB states must share one dimension")
    dc = len(p)
    rho = np.zeros((d_ab * dc, d_ab * dc), dtype=complex)
    for i, (pi, k) in enumerate(zip(p, kets)):
        flag = np.zeros((dc, dc))
        flag[i, i] = 1.0
        rho += pi * np.kron(np.outer(k, k.conj()), flag)
    reg = ab_reg + Register.of(("C", dc))
    return MultiState(reg, rho), RoleMap(ab_reg.labels[0], ab_reg.labels[1], ("C",))


def purify_check(s: MultiState) -> np.ndarray:
    """Ket of a state that must be pure (rank one)."""
    if not s.is_pure():
        raise StateInvariantError("expected a pure state")
    eig = densemat.herm_eig(s.rho)
    return eig.eigenvectors[:, 0]


def chain_state(links: Sequence[MultiState] | None = None) -> tuple[MultiState, RoleMap]:
    """Two-repeater chain A-C1, C2-D1, D2-B; repeater C holds C1,C2 and D holds D1,D2."""
    names = [("A", "C1"), ("C2", "D1"), ("D2", "B")]
    if links is None:
        links = [maximally_entangled(2, pair)[0] for pair in names]
    if len(links) != 3:
        raise UsageError("a two-repeater chain has exactly three links")
    relabelled = []
    for link, (x, y) in zip(links, names):
        if len(link.register) != 2:
            raise UsageError("each link must be a bipartite state")
        reg = Register.of((x, link.register.dims[0]), (y, link.register.dims[1]))
        if link.ket is not None:
            relabelled.append(MultiState(reg, ket=link.ket, validate=False))
        else:
            relabelled.append(MultiState(reg, link.rho, validate=False))
    state = tensor_all(relabelled)
    return state, RoleMap("A", "B", ("C1", "C2", "D1", "D2"))


def noisy_link() -> tuple[MultiState, RoleMap]:
    """The tripartite pure state on B, C2, R alone, with C2 as the helper."""
    return _psi_bc2r(), RoleMap(None, "B", ("C2",), "R")


CHAIN_LINKS = {
    "factorized-chain": [("A", "C1"), ("C2", "B")],
    "cnot-corrupted": [("A", "C1"), ("C2", "B")],
    "chain-2-repeaters": [("A", "C1"), ("C2", "D1"), ("D2", "B")],
}

EXAMPLES = ("factorized-chain", "cnot-corrupted", "cq", "maximally-entangled", "chain-2-repeaters", "noisy-link")


def example_state(name: str, **params) -> tuple[MultiState, RoleMap]:
    if name == "factorized-chain":
        return factorized_chain()
    if name == "cnot-corrupted":
        return cnot_corrupted()
    if name == "maximally-entangled":
        return maximally_entangled(int(params.get("m", 2)))
    if name == "cq":
        p = params.get("p", (0.5, 0.5))
        states = params.get("states", ("bell", "product"))
        kets = [named_ab_ket(s) if isinstance(s, str) else s for s in states]
        return cq_state(p, kets)
    if name == "chain-2-repeaters":
        return chain_state(params.get("links"))
    if name == "noisy-link":
        return noisy_link()
    raise UnknownExample(f"unknown example {name!r}; choose from {', '.join(EXAMPLES)}")


# --- JSON state description ------------------------------------------------

def _complex_list(values) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(values).reshape(-1)]


def state_to_json(s: MultiState, roles: RoleMap | None = None) -> dict:
    out: dict = {"systems": [{"label": lab, "dim": d} for lab, d in s.register.systems]}
    if s.ket is not None:
        out["kind"] = "pure"
        out["amplitudes"] = _complex_list(s.ket)
    else:
        out["kind"] = "mixed"
        out["matrix"] = [_complex_list(row) for row in s.rho]
    out["roles"] = roles.to_json() if roles is not None else None
    return out


def _parse_complex(entry) -> complex:
    if isinstance(entry, (int, float)):
        return complex(entry)
    if isinstance(entry, (list, tuple)) and len(entry) == 2:
        return complex(float(entry[0]), float(entry[1]))
    raise UsageError(f"expected [re, im], got {entry!r}")


def state_from_json(data: dict) -> tuple[MultiState, RoleMap | None]:
    if not isinstance(data, dict):
        raise UsageError("state description must be a JSON object")
    try:
        reg = Register(tuple((sys["label"], sys["dim"]) for sys in data["systems"]))
        kind = data.get("kind", "pure" if "amplitudes" in data else "mixed")
        if kind == "pure":
            ket = np.array([_parse_complex(e) for e in data["amplitudes"]])
            state = MultiState(reg, ket=ket)
        elif kind == "mixed":
            rho = np.array([[_parse_complex(e) for e in row] for row in data["matrix"]])
            state = MultiState(reg, rho)
        else:
            raise UsageError(f"unknown state kind {kind!r}")
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed state description: {exc}") from exc
    roles = data.get("roles")
    roles = RoleMap.from_json(roles).validate(reg) if roles else None
    return state, roles
