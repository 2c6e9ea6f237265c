"""Dense complex matrix kernel.

Hermitian eigendecomposition (LAPACK or a cyclic complex Jacobi solver),
spectral functions of PSD operators, trace norm, Uhlmann fidelity, and the
trace/purified distances between (sub)normalized states.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from eoa.config import settings
from eoa.errors import NoConvergence, NotHermitian, NotPSD

JACOBI_MAX_SWEEPS = 100


@dataclass(frozen=True)
class EigResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {a.shape}")
    return a


def adjoint(m) -> np.ndarray:
    return as_matrix(m).conj().T


def check_hermitian(m: np.ndarray, tol: float | None = None) -> None:
    tol = settings.tol if tol is None else tol
    if m.shape[0] != m.shape[1]:
        raise NotHermitian(f"matrix is not square: {m.shape}")
    err = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if err > tol:
        raise NotHermitian(f"max |M - M^dagger| = {err:.3g} exceeds {tol:.3g}")


def _off_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - np.diag(a.diagonal())))


def jacobi_eigh(m, max_sweeps: int = JACOBI_MAX_SWEEPS, eps: float = 1e-15):
    """Cyclic Jacobi eigensolver for a Hermitian matrix.

    Each pivot (p, q) is made real by a diagonal phase and then annihilated
    by a real plane rotation. Returns ``(eigenvalues, eigenvectors)`` in
    solver order (unsorted).
    """
    a = as_matrix(m).copy()
    a = 0.5 * (a + a.conj().T)
    d = a.shape[0]
    v = np.eye(d, dtype=complex)
    if d < 2:
        return a.diagonal().real.copy(), v
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(d), v
    threshold = eps * scale
    for _ in range(max_sweeps):
        off = _off_norm(a)
        if off <= threshold:
            return a.diagonal().real.copy(), v
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                b = abs(apq)
                if b <= 1e-300 or b < 1e-3 * threshold / d:
                    continue
                phase = apq / b
                app, aqq = a[p, p].real, a[q, q].real
                theta = (aqq - app) / (2.0 * b)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.hypot(t, 1.0)
                s = t * c
                # G = diag(1, conj(phase)) @ [[c, s], [-s, c]]
                g = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = g.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                v[:, idx] = v[:, idx] @ g
    off = _off_norm(a)
    if off <= threshold:
        return a.diagonal().real.copy(), v
    raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps (off-norm {off:.3g})")


def herm_eig(m, method: str | None = None) -> EigResult:
    """Spectral decomposition of a Hermitian matrix, eigenvalues descending."""
    a = as_matrix(m)
    check_hermitian(a)
    method = method or settings.eig_method
    if method == "jacobi":
        w, v = jacobi_eigh(a)
    elif method == "lapack":
        w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    order = np.argsort(w, kind="stable")[::-1]
    return EigResult(np.asarray(w[order], dtype=float), np.asarray(v[:, order]))


def eigvalsh(m) -> np.ndarray:
    """Eigenvalues only, descending."""
    a = as_matrix(m)
    check_hermitian(a)
    if settings.eig_method == "jacobi":
        w = jacobi_eigh(a)[0]
    else:
        w = np.linalg.eigvalsh(0.5 * (a + a.conj().T))
    return np.sort(w)[::-1]


def clamp_spectrum(w: np.ndarray, tol: float | None = None) -> np.ndarray:
    """Zero out small negative eigenvalues; raise on genuinely negative ones."""
    tol = settings.tol if tol is None else tol
    w = np.asarray(w, dtype=float)
    if w.size and w.min() < -tol:
        raise NotPSD(f"eigenvalue {w.min():.3g} below -{tol:.3g}")
    return np.where(w < 0.0, 0.0, w)


def psd_spectrum(m) -> np.ndarray:
    return clamp_spectrum(eigvalsh(m))


def sqrtm_psd(m, cutoff: float = 0.0) -> np.ndarray:
    """PSD square root; eigenvalues at or below ``cutoff`` are treated as zero."""
    eig = herm_eig(m)
    w = clamp_spectrum(eig.eigenvalues)
    keep = w > cutoff
    v = eig.eigenvectors[:, keep]
    return (v * np.sqrt(w[keep])) @ v.conj().T


def trace_norm(m) -> float:
    """Sum of singular values; uses the spectrum when M is Hermitian."""
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ValueError("trace norm expects a square matrix")
    if a.size == 0:
        return 0.0
    if np.max(np.abs(a - a.conj().T)) <= settings.tol:
        return float(np.sum(np.abs(eigvalsh(a))))
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


def trace_distance(rho, sigma) -> float:
    """Half the trace norm of the difference."""
    return 0.5 * trace_norm(as_matrix(rho) - as_matrix(sigma))


def _check_state(m: np.ndarray, name: str) -> None:
    check_hermitian(m)
    tr = np.trace(m).real
    if tr > 1.0 + settings.tol:
        raise NotPSD(f"{name} has trace {tr:.12g} > 1")


SUPPORT_CUTOFF = 1e-14


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity ``Tr sqrt(sqrt(rho) sigma sqrt(rho))`` (not squared).

    Evaluated as the trace norm of ``sqrt(rho) sqrt(sigma)`` so that round-off
    zeros in rank-deficient inputs do not leak in through a square root.
    """
    rho, sigma = as_matrix(rho), as_matrix(sigma)
    _check_state(rho, "rho")
    _check_state(sigma, "sigma")
    a = sqrtm_psd(rho, SUPPORT_CUTOFF) @ sqrtm_psd(sigma, SUPPORT_CUTOFF)
    f = float(np.sum(np.linalg.svd(a, compute_uv=False))) if a.size else 0.0
    return min(max(f, 0.0), 1.0)


def generalized_fidelity(rho, sigma) -> float:
    rho, sigma = as_matrix(rho), as_matrix(sigma)
    f = fidelity(rho, sigma)
    slack = max(1.0 - np.trace(rho).real, 0.0) * max(1.0 - np.trace(sigma).real, 0.0)
    return min(f + float(np.sqrt(slack)), 1.0)


def purified_distance(rho, sigma) -> float:
    fb = generalized_fidelity(rho, sigma)
    return float(np.sqrt(max(1.0 - fb * fb, 0.0)))


def is_unitary(u, tol: float | None = None) -> bool:
    tol = settings.tol if tol is None else tol
    u = as_matrix(u)
    if u.shape[0] != u.shape[1]:
        return False
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol)
