"""Typical subspaces, Haar-random bases, and the random-measurement decoupling experiment.

The helper's n copies are projected onto the delta-typical subspace of its
single-copy spectrum, then measured in a Haar-random orthonormal basis of
that subspace. For each outcome we record how far the reference and B
marginals moved away from their i.i.d. product form.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from eoa import densemat
from eoa.config import settings
from eoa.errors import DegenerateProjection, TooLarge, UsageError
from eoa.measure import MIN_OUTCOME_PROB, MeasurementEnsemble, Outcome
from eoa.qstate import MultiState, Register, purify_check, reduced_matrix
from eoa.rates import _sig, entropy_of

DEFAULT_DELTA = 0.2


@dataclass(frozen=True)
class TypicalSubspace:
    n: int
    delta: float
    p: np.ndarray
    indices: np.ndarray
    basis: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.indices.size)

    @property
    def letters(self) -> int:
        return int(self.p.size)

    def sequences(self) -> np.ndarray:
        """Digit array (dim, n) of the typical sequences."""
        return sequence_digits(self.indices, self.letters, self.n)

    def mass(self) -> float:
        """Tr[Pi psi^{(x)n}] for the i.i.d. source p."""
        if self.dim == 0:
            return 0.0
        digits = self.sequences()
        return float(np.sum(np.prod(self.p[digits], axis=1)))

    def isometry(self) -> np.ndarray:
        """Columns are the typical product vectors |x_1>...|x_n> in the supplied basis."""
        d, n = self.letters, self.n
        if d**n * max(self.dim, 1) > settings.max_dim * 64:
            raise TooLarge(f"isometry of shape {(d**n, self.dim)} is too large")
        out = np.empty((d**n, self.dim), dtype=complex)
        for col, digits in enumerate(self.sequences()):
            v = self.basis[:, digits[0]]
            for k in digits[1:]:
                v = np.kron(v, self.basis[:, k])
            out[:, col] = v
        return out

    def projector(self) -> np.ndarray:
        w = self.isometry()
        return w @ w.conj().T


def sequence_digits(indices: np.ndarray, d: int, n: int) -> np.ndarray:
    powers = d ** np.arange(n - 1, -1, -1)
    return (np.asarray(indices)[:, None] // powers[None, :]) % d


def typical_projector(p, eigenbasis=None, n: int = 1, delta: float = DEFAULT_DELTA) -> TypicalSubspace:
    """delta-typical sequences of p^{(x)n}: |N(x|x^n)/n - p(x)| <= delta for every letter."""
    p = np.asarray(p, dtype=float)
    if np.any(p < -settings.tol) or abs(p.sum() - 1.0) > settings.tol:
        raise UsageError(f"p must be a probability vector, got {p.tolist()}")
    if n < 1:
        raise UsageError("n must be at least 1")
    if delta < 0:
        raise UsageError("delta must be nonnegative")
    d = p.size
    if d**n > settings.max_dim:
        raise TooLarge(f"{d}^{n} sequences exceed the guard of {settings.max_dim}")
    basis = np.eye(d, dtype=complex) if eigenbasis is None else densemat.as_matrix(eigenbasis)
    all_idx = np.arange(d**n)
    digits = sequence_digits(all_idx, d, n)
    counts = np.stack([(digits == x).sum(axis=1) for x in range(d)], axis=1)
    ok = np.all(np.abs(counts / n - p[None, :]) <= delta + 1e-12, axis=1)
    return TypicalSubspace(n, float(delta), p, all_idx[ok], basis)


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed d x d unitary: QR of a complex Ginibre matrix, phases fixed by diag(R)."""
    if d < 1:
        raise UsageError("dimension must be positive")
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    phases = np.where(np.abs(diag) > 0, diag / np.abs(diag), 1.0)
    return q * phases[None, :]


def _pure_ket(s: MultiState) -> np.ndarray:
    if s.ket is not None:
        return s.ket
    return purify_check(s)


def _copy_register(rest: Sequence[tuple[str, int]], n: int) -> Register:
    return Register(tuple((f"{lab}_{k + 1}", d) for k in range(n) for lab, d in rest))


@dataclass
class TypicalMeasurement:
    """Pieces of a random typical measurement kept for reuse across trials."""

    projected: np.ndarray
    typical: TypicalSubspace
    rest_register: Register
    mass: float


def prepare_typical(s: MultiState, helper: Sequence[str], n: int, delta: float,
                    project_others: Sequence[str] = ()) -> TypicalMeasurement:
    """Build psi^{(x)n}, project the helper copies onto their typical subspace and renormalise.

    ``project_others`` optionally also projects the copies of the named
    unmeasured subsystems onto their own typical subspaces.
    """
    helper = [helper] if isinstance(helper, str) else list(helper)
    reg = s.register
    ket = _pure_ket(s)
    cidx = reg.indices(helper)
    rest = [i for i in range(len(reg)) if i not in cidx]
    if not rest:
        raise UsageError("the helper cannot hold every subsystem")
    dc = reg.dim_of(helper)
    dr = ket.size // dc
    if (dc * dr) ** n > settings.max_dim * 16 or dc**n > settings.max_dim:
        raise TooLarge(f"{n} copies of a dimension-{dc * dr} state exceed the dense guard")
    m = ket.reshape(reg.dims).transpose(cidx + rest).reshape(dc, dr)
    rho_c = m @ m.conj().T
    eig = densemat.herm_eig(rho_c)
    p = densemat.clamp_spectrum(eig.eigenvalues)
    p = p / p.sum()
    typ = typical_projector(p, eig.eigenvectors, n, delta)
    rest_reg = _copy_register([reg.systems[i] for i in rest], n)
    if typ.dim == 0:
        raise DegenerateProjection(f"typical subspace is empty at n={n}, delta={delta}")
    mn = m
    for _ in range(n - 1):
        mn = np.kron(mn, m)
    projected = typ.isometry().conj().T @ mn
    for label in project_others:
        projected = _project_rest(projected, reg, rest_reg, label, n, delta, m, cidx, rest)
    mass = float(np.sum(np.abs(projected) ** 2))
    if mass < 1e-9:
        raise DegenerateProjection(f"typical projection kept only {mass:.3g} of the norm")
    return TypicalMeasurement(projected / math.sqrt(mass), typ, rest_reg, mass)


def _project_rest(projected, reg, rest_reg, label, n, delta, m, cidx, rest):
    rest_labels = [reg.labels[i] for i in rest]
    if label not in rest_labels:
        raise UsageError(f"{label!r} is not an unmeasured subsystem")
    single = MultiState(Register(tuple(reg.systems[i] for i in cidx + rest)), ket=m.reshape(-1), validate=False)
    rho = reduced_matrix(single, [label])
    eig = densemat.herm_eig(rho)
    p = densemat.clamp_spectrum(eig.eigenvalues)
    proj = typical_projector(p / p.sum(), eig.eigenvectors, n, delta).projector()
    copies = [f"{label}_{k + 1}" for k in range(n)]
    from eoa.qstate import apply_operator_rows

    return apply_operator_rows(projected.T, rest_reg, copies, proj).T


def measure_in_basis(tm: TypicalMeasurement, u: np.ndarray) -> MeasurementEnsemble:
    """Project onto the columns of ``u`` (an orthonormal basis of the typical subspace)."""
    amps = u.conj().T @ tm.projected
    probs = np.sum(np.abs(amps) ** 2, axis=1)
    keep = probs >= MIN_OUTCOME_PROB
    total = float(probs[keep].sum())
    outcomes = [
        Outcome(int(j), float(probs[j] / total), MultiState(tm.rest_register, ket=amps[j] / math.sqrt(probs[j]), validate=False))
        for j in np.flatnonzero(keep)
    ]
    return MeasurementEnsemble(outcomes, discarded=max(0.0, 1.0 - tm.mass))


def random_typical_measurement(s: MultiState, helper, n: int, delta: float = DEFAULT_DELTA,
                               rng: np.random.Generator | None = None,
                               project_others: Sequence[str] = ()) -> MeasurementEnsemble:
    """Haar-random rank-one measurement of the helper's typical subspace on n copies.

    Outcome states live on the unmeasured subsystems, relabelled ``X_k`` for
    copy k. ``discarded`` holds the atypical mass removed before measuring.
    """
    rng = np.random.default_rng() if rng is None else rng
    tm = prepare_typical(s, helper, n, delta, project_others)
    return measure_in_basis(tm, haar_unitary(tm.typical.dim, rng))


@dataclass
class TrialResult:
    trial: int
    avg_dist_r: float
    avg_dist_b: float
    joint_success: float
    probs: np.ndarray = field(repr=False)
    dist_r: np.ndarray = field(repr=False)
    dist_b: np.ndarray = field(repr=False)

    def joint_success_fraction(self, xi1: float, xi2: float) -> float:
        return joint_success_fraction(self.probs, self.dist_r, self.dist_b, xi1, xi2)

    def markov_bound(self, xi1: float, xi2: float) -> float:
        return 1.0 - self.avg_dist_r / xi1 - self.avg_dist_b / xi2


def joint_success_fraction(probs, dist_r, dist_b, xi1: float, xi2: float) -> float:
    hit = (np.asarray(dist_r) < xi1) & (np.asarray(dist_b) < xi2)
    return float(np.sum(np.asarray(probs)[hit]))


@dataclass
class DecouplingStats:
    n: int
    trials: int
    seed: int
    delta: float
    xi1: float
    xi2: float
    typical_dim: int
    discarded_mass: float
    per_trial: list[TrialResult]
    notes: list[str] = field(default_factory=list)

    def _column(self, name: str) -> np.ndarray:
        return np.array([getattr(t, name) for t in self.per_trial], dtype=float)

    @property
    def mean_dist_r(self) -> float:
        return float(np.mean(self._column("avg_dist_r"))) if self.per_trial else 0.0

    @property
    def mean_dist_b(self) -> float:
        return float(np.mean(self._column("avg_dist_b"))) if self.per_trial else 0.0

    @property
    def std_dist_r(self) -> float:
        return float(np.std(self._column("avg_dist_r"), ddof=1)) if len(self.per_trial) > 1 else 0.0

    @property
    def std_dist_b(self) -> float:
        return float(np.std(self._column("avg_dist_b"), ddof=1)) if len(self.per_trial) > 1 else 0.0

    @property
    def mean_joint_success(self) -> float:
        return float(np.mean(self._column("joint_success"))) if self.per_trial else 0.0

    def to_json(self, digits: int = 9) -> dict:
        return {
            "n": self.n,
            "trials": self.trials,
            "seed": self.seed,
            "delta": self.delta,
            "xi1": self.xi1,
            "xi2": self.xi2,
            "typicalDim": self.typical_dim,
            "discardedMass": _sig(self.discarded_mass, digits),
            "meanTraceDistR": _sig(self.mean_dist_r, digits),
            "stdTraceDistR": _sig(self.std_dist_r, digits),
            "meanTraceDistB": _sig(self.mean_dist_b, digits),
            "stdTraceDistB": _sig(self.std_dist_b, digits),
            "meanJointSuccessFraction": _sig(self.mean_joint_success, digits),
            "perTrial": [
                {
                    "trial": t.trial,
                    "avgTraceDistR": _sig(t.avg_dist_r, digits),
                    "avgTraceDistB": _sig(t.avg_dist_b, digits),
                    "jointSuccessFraction": _sig(t.joint_success, digits),
                }
                for t in self.per_trial
            ],
            "notes": list(self.notes),
        }


CSV_COLUMNS = ["n", "trial", "avgTraceDistR", "avgTraceDistB", "jointSuccessFraction"]


def stats_to_csv(stats: Sequence[DecouplingStats], digits: int = 9) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for st in stats:
        for t in st.per_trial:
            w.writerow([st.n, t.trial, _sig(t.avg_dist_r, digits), _sig(t.avg_dist_b, digits),
                        _sig(t.joint_success, digits)])
    return buf.getvalue()


def _hypothesis_notes(s: MultiState, helper: list[str], b: str, r: str) -> list[str]:
    ket = _pure_ket(s)
    pure = MultiState(s.register, ket=ket, validate=False)
    others = [lab for lab in s.register.labels if lab not in helper and lab not in (b, r)]

    def ent(labels):
        return entropy_of(reduced_matrix(pure, labels))

    notes = []
    s_r, s_b = ent([r]), ent([b])
    if not s_r < s_b:
        notes.append(f"hypothesis S(R) < S(B) fails: S(R)={s_r:.6g}, S(B)={s_b:.6g}")
    s_ab = ent(others + [b])
    s_ar = ent(others + [r])
    if not s_r < s_ab:
        notes.append(f"hypothesis S(R) < S(AB) fails: S(R)={s_r:.6g}, S(AB)={s_ab:.6g}")
    if not s_b < s_ar:
        notes.append(f"hypothesis S(B) < S(AR) fails: S(B)={s_b:.6g}, S(AR)={s_ar:.6g}")
    return notes


def _ntensor(rho: np.ndarray, n: int) -> np.ndarray:
    out = rho
    for _ in range(n - 1):
        out = np.kron(out, rho)
    return out


def decoupling_experiment(
    s: MultiState,
    helper,
    b: str,
    r: str,
    n_values: Sequence[int],
    trials: int,
    delta: float = DEFAULT_DELTA,
    xi1: float = 0.5,
    xi2: float = 0.5,
    seed: int = 0,
    project_others: Sequence[str] = (),
) -> list[DecouplingStats]:
    """Monte-Carlo over Haar-random typical measurements of the helper.

    For every n and trial records sum_j p_j ||psi_j^{R^n} - (psi^R)^{(x)n}||_1,
    the same for B, and the outcome mass on which both distances fall below
    xi1 and xi2. Trial seeds are spawned from ``(seed, n)``.
    """
    helper = [helper] if isinstance(helper, str) else list(helper)
    if trials < 1:
        raise UsageError("trials must be at least 1")
    if xi1 <= 0 or xi2 <= 0:
        raise UsageError("xi1 and xi2 must be positive")
    for lab in (b, r, *helper):
        s.register.index(lab)
    notes = _hypothesis_notes(s, helper, b, r)
    single = MultiState(s.register, ket=_pure_ket(s), validate=False)
    rho_r1 = reduced_matrix(single, [r])
    rho_b1 = reduced_matrix(single, [b])
    results = []
    for n in n_values:
        tm = prepare_typical(s, helper, n, delta, project_others)
        target_r = _ntensor(rho_r1, n)
        target_b = _ntensor(rho_b1, n)
        r_copies = [f"{r}_{k + 1}" for k in range(n)]
        b_copies = [f"{b}_{k + 1}" for k in range(n)]
        children = np.random.SeedSequence([seed, n]).spawn(trials)
        per_trial = []
        for t, child in enumerate(children):
            ens = measure_in_basis(tm, haar_unitary(tm.typical.dim, np.random.default_rng(child)))
            probs = ens.probs
            dr = np.array([densemat.trace_norm(reduced_matrix(o.state, r_copies) - target_r) for o in ens.outcomes])
            db = np.array([densemat.trace_norm(reduced_matrix(o.state, b_copies) - target_b) for o in ens.outcomes])
            per_trial.append(TrialResult(
                trial=t,
                avg_dist_r=float(probs @ dr),
                avg_dist_b=float(probs @ db),
                joint_success=joint_success_fraction(probs, dr, db, xi1, xi2),
                probs=probs, dist_r=dr, dist_b=db,
            ))
        results.append(DecouplingStats(
            n=n, trials=trials, seed=seed, delta=delta, xi1=xi1, xi2=xi2,
            typical_dim=tm.typical.dim, discarded_mass=1.0 - tm.mass,
            per_trial=per_trial, notes=list(notes),
        ))
    return results
