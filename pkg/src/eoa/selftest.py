"""Embedded golden checks run by ``eoa selftest``."""

from __future__ import annotations

import math

import numpy as np

from eoa import densemat, measure, rates
from eoa.qstate import CHAIN_LINKS, MultiState, Register, example_state, partial_trace

H_QUARTER = -(0.25 * math.log2(0.25) + 0.75 * math.log2(0.75))
S_R = -sum(x * math.log2(x) for x in ((1 + math.sqrt(0.5)) / 2, (1 - math.sqrt(0.5)) / 2))


def _close(a: float, b: float, tol: float) -> tuple[bool, str]:
    return abs(a - b) <= tol, f"{a:.9g} vs {b:.9g} (tol {tol:g})"


def _random_density(rng, d: int) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def run_selftest(corpus: int = 100) -> list[tuple[str, bool, str]]:
    out = []
    s, roles = example_state("factorized-chain")
    rep = rates.assisted_lower_bound(s, roles)
    out.append(("factorized I(AC>B)", *_close(rep["I(AC>B)"], 1 - S_R, 5e-6)))
    out.append(("factorized I(A>BC)", *_close(rep["I(A>BC)"], H_QUARTER, 5e-6)))
    out.append(("factorized I(A>B)", *_close(rep["I(A>B)"], -H_QUARTER, 5e-6)))
    links = rates.links_from_state(s, CHAIN_LINKS["factorized-chain"])
    out.append(("factorized R_hier = L", *_close(rates.chain_hierarchical_rate(links), rep["L"], 1e-9)))

    phi, roles = example_state("cnot-corrupted")
    rep_phi = rates.assisted_lower_bound(phi, roles)
    out.append(("cnot I(A>C1)", *_close(rates.coherent_info(phi, "A", "C1"), 0.0, 1e-9)))
    out.append(("cnot L unchanged", *_close(rep_phi["L"], rep["L"], 1e-9)))
    eigs = densemat.psd_spectrum(partial_trace(phi, ["C1"]).rho)
    out.append(("cnot C1 spectrum", *_close(float(np.max(np.abs(eigs - [0.75, 0.25]))), 0.0, 1e-9)))
    links = rates.links_from_state(phi, CHAIN_LINKS["cnot-corrupted"])
    out.append(("cnot R_hier null", *_close(rates.chain_hierarchical_rate(links), 0.0, 1e-9)))

    cq, cq_roles = example_state("cq", p=(0.5, 0.5), states=("bell", "product"))
    ens = measure.measure_helper(cq, ["C"], measure.POVM.basis("C", 2))
    out.append(("cq assistance", *_close(measure.cq_assistance(cq, cq_roles), 0.5, 1e-9)))
    out.append(("cq = avg hashing", *_close(measure.avg_hashing_rate(ens, "A", "B"), 0.5, 1e-9)))

    rng = np.random.default_rng(20240601)
    reg = Register.of(("A", 2), ("B", 2), ("C", 2))
    worst_ssa = math.inf
    worst_fvdg = -math.inf
    for _ in range(corpus):
        st = MultiState(reg, _random_density(rng, 8), validate=False)
        worst_ssa = min(worst_ssa, rates.coherent_info(st, "A", ["B", "C"]) - rates.coherent_info(st, "A", "B"))
        r1, r2 = _random_density(rng, 3), _random_density(rng, 3)
        f, d = densemat.fidelity(r1, r2), densemat.trace_distance(r1, r2)
        worst_fvdg = max(worst_fvdg, (1 - f) - d, d - math.sqrt(max(1 - f * f, 0.0)))
    out.append(("strong subadditivity corpus", worst_ssa >= -1e-9, f"worst slack {worst_ssa:.3g}"))
    out.append(("Fuchs-van de Graaf corpus", worst_fvdg <= 1e-8, f"worst violation {worst_fvdg:.3g}"))
    return out
