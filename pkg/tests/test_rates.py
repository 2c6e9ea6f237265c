import math

import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from eoa import rates
from eoa.config import override
from eoa.errors import OverlappingSystems, TooManyHelpers, UsageError
from eoa.qstate import (
    CHAIN_LINKS,
    MultiState,
    Register,
    RoleMap,
    ket_from_terms,
    example_state,
    tensor_product,
)

from conftest import H_QUARTER, S_R, h2, qubits, random_density, random_mixed_state, random_pure_state


@pytest.fixture(scope="module")
def chain():
    return example_state("factorized-chain")


@pytest.fixture(scope="module")
def corrupted():
    return example_state("cnot-corrupted")


def ghz():
    return MultiState.pure(qubits("A", "B", "C"), ket_from_terms((2, 2, 2), {"000": 2**-0.5, "111": 2**-0.5}))


def product_ab(rng, rho_a=None):
    a = MultiState(qubits("A"), random_density(rng, 2) if rho_a is None else rho_a)
    b = MultiState(qubits("B"), random_density(rng, 2))
    return tensor_product(a, b)


class TestEntropy:
    def test_pure_global(self, chain):
        assert rates.von_neumann(chain[0], chain[0].labels) == 0.0

    def test_maximally_mixed(self):
        assert rates.von_neumann(MultiState(qubits("A"), np.eye(2) / 2), "A") == pytest.approx(1.0)

    def test_psi_ac1_marginal(self, chain):
        assert rates.von_neumann(chain[0], "A") == pytest.approx(H_QUARTER, abs=1e-12)
        assert H_QUARTER == pytest.approx(0.811278, abs=1e-6)

    def test_reference_marginal(self, chain):
        assert rates.von_neumann(chain[0], "R") == pytest.approx(S_R, abs=1e-12)
        assert S_R == pytest.approx(0.600876, abs=1e-6)

    def test_bounded_by_log_dim(self, rng):
        for _ in range(20):
            s = random_mixed_state(rng, "A", "B")
            assert 0.0 <= rates.von_neumann(s, ["A", "B"]) <= 2.0 + 1e-12

    def test_natural_log_toggle(self):
        with override(log_base=math.e):
            assert rates.von_neumann(MultiState(qubits("A"), np.eye(2) / 2), "A") == pytest.approx(math.log(2))

    def test_binary_entropy_helper(self):
        assert rates.binary_entropy(0.25) == pytest.approx(h2(0.25))
        assert rates.binary_entropy(0.0) == 0.0


class TestCoherentInfo:
    def test_product_is_minus_entropy(self, rng):
        s = product_ab(rng)
        assert rates.coherent_info(s, "A", "B") == pytest.approx(-rates.von_neumann(s, "A"), abs=1e-12)

    def test_example_values(self, chain):
        s = chain[0]
        assert rates.coherent_info(s, "A", ["B", "C1", "C2"]) == pytest.approx(H_QUARTER, abs=1e-12)
        assert rates.coherent_info(s, ["A", "C1", "C2"], "B") == pytest.approx(1 - S_R, abs=1e-12)
        assert round(rates.coherent_info(s, ["A", "C1", "C2"], "B"), 2) == 0.40
        assert round(rates.coherent_info(s, "A", ["B", "C1", "C2"]), 2) == 0.81

    def test_overlap_rejected(self, chain):
        with pytest.raises(OverlappingSystems):
            rates.coherent_info(chain[0], ["A", "B"], "B")

    def test_empty_rejected(self, chain):
        with pytest.raises(UsageError):
            rates.coherent_info(chain[0], [], "B")


class TestHashing:
    def test_bell(self):
        s, _ = example_state("maximally-entangled")
        assert rates.hashing_bound(s, "A", "B") == pytest.approx(1.0)

    def test_product_clipped(self, rng):
        assert rates.hashing_bound(product_ab(rng), "A", "B") == 0.0

    def test_chain_ab_clipped(self, chain):
        assert rates.coherent_info(chain[0], "A", "B") == pytest.approx(-H_QUARTER, abs=1e-12)
        assert rates.hashing_bound(chain[0], "A", "B") == 0.0


class TestAssistedLowerBound:
    def test_factorized_chain(self, chain):
        rep = rates.assisted_lower_bound(*chain)
        assert rep["L"] == pytest.approx(1 - S_R, abs=1e-12)
        assert rep["L"] == rep["I(AC>B)"]
        assert rep["bound"] == pytest.approx(0.399124, abs=1e-6)
        assert rep.notes == []

    def test_cnot_corrupted_same_l(self, chain, corrupted):
        a, b = rates.assisted_lower_bound(*chain), rates.assisted_lower_bound(*corrupted)
        for key in ("I(AC>B)", "I(A>BC)", "L", "bound"):
            assert a[key] == pytest.approx(b[key], abs=1e-9)

    def test_pure_tripartite(self, rng):
        for _ in range(20):
            s = random_pure_state(rng, "A", "B", "C")
            rep = rates.assisted_lower_bound(s, RoleMap("A", "B", ("C",)))
            expected = min(rates.von_neumann(s, "A"), rates.von_neumann(s, "B"))
            assert rep["bound"] == pytest.approx(expected, abs=1e-9)

    def test_no_helpers_reduces_to_hashing(self):
        s, roles = example_state("maximally-entangled")
        rep = rates.assisted_lower_bound(s, roles)
        assert rep["L"] == rep["I(A>B)"] == pytest.approx(1.0)

    def test_degeneracy_flag(self):
        # product C: S(AR) = S(BC) equals S(B) + S(C) only when S(C) = 0
        s = tensor_product(example_state("maximally-entangled")[0],
                           MultiState(Register.of(("C", 2)), np.diag([1.0, 0.0])))
        rep = rates.assisted_lower_bound(s, RoleMap("A", "B", ("C",)))
        assert any("degenerate" in n for n in rep.notes)

    def test_coherent_informations_recomputed(self, chain):
        s, roles = chain
        rep = rates.assisted_lower_bound(s, roles)
        abc = ["A", "B", "C1", "C2"]
        assert rep["I(A>BC)"] == pytest.approx(
            rates.von_neumann(s, ["B", "C1", "C2"]) - rates.von_neumann(s, abc), abs=1e-9)

    def test_missing_recipient(self, chain):
        with pytest.raises(UsageError):
            rates.assisted_lower_bound(chain[0], RoleMap(None, "B", ("C1",)))


class TestBeatsHashing:
    def test_product_helper(self, rng):
        s = tensor_product(example_state("maximally-entangled")[0],
                           MultiState(Register.of(("C", 2)), random_density(rng, 2)))
        test = rates.beats_hashing(s, RoleMap("A", "B", ("C",)))
        assert not test.beats
        assert test.coherent_c_ab == pytest.approx(-rates.von_neumann(s, "C"), abs=1e-12)

    def test_ghz(self):
        s = ghz()
        roles = RoleMap("A", "B", ("C",))
        test = rates.beats_hashing(s, roles)
        # I(C>AB) = S(AB) - S(ABC) = 1, S(A|BC) = -1, S(A|B) = 0
        assert test.beats
        assert test.coherent_c_ab == pytest.approx(1.0)
        assert test.cond_a_bc == pytest.approx(-1.0)
        assert test.cond_a_b == pytest.approx(0.0, abs=1e-12)
        rep = rates.assisted_lower_bound(s, roles)
        assert rep["L"] > rep["I(A>B)"]

    @hsettings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.booleans())
    def test_implication(self, seed, pure):
        rng = np.random.default_rng(seed)
        s = random_pure_state(rng, "A", "B", "C") if pure else random_mixed_state(rng, "A", "B", "C", rank=2)
        roles = RoleMap("A", "B", ("C",))
        if rates.beats_hashing(s, roles).beats:
            rep = rates.assisted_lower_bound(s, roles)
            assert rep["L"] > rep["I(A>B)"]


class TestMinCut:
    def test_no_helpers(self):
        s, roles = example_state("maximally-entangled")
        rep = rates.min_cut_coherent_info(s, roles)
        assert rep["Icmin"] == rep["I(A>B)"] == pytest.approx(1.0)
        assert rep.minimizing_cut == []

    def test_one_helper_equals_l(self, rng):
        for _ in range(20):
            s = random_mixed_state(rng, "A", "B", "C", rank=3)
            roles = RoleMap("A", "B", ("C",))
            assert rates.min_cut_coherent_info(s, roles)["Icmin"] == pytest.approx(
                rates.assisted_lower_bound(s, roles)["L"], abs=1e-12)

    def test_pure_two_helpers(self, rng):
        for _ in range(20):
            s = random_pure_state(rng, "A", "B", "C1", "C2")
            roles = RoleMap("A", "B", ("C1", "C2"))
            rep = rates.min_cut_coherent_info(s, roles)
            assert rep["Icmin"] == pytest.approx(rates.pure_collapse_value(s, roles), abs=1e-9)
            assert len(rep.cuts) == 4

    def test_cut_order_and_ties(self):
        s, _ = example_state("chain-2-repeaters")
        roles = RoleMap("A", "B", ("C1", "C2", "D1", "D2"))
        rep = rates.min_cut_coherent_info(s, roles)
        assert [c for c, _ in rep.cuts][:3] == [[], ["C1"], ["C2"]]
        # pure global state: every cut value is S(B T') >= 0; {C1} closes the A link
        assert rep["Icmin"] == pytest.approx(0.0, abs=1e-12)
        assert rep.minimizing_cut == ["C1"]
        ties = [c for c, v in rep.cuts if abs(v - rep["Icmin"]) <= 1e-9]
        assert rep.minimizing_cut == ties[0]
        assert (len(ties) > 1) == any("tied" in n for n in rep.notes)

    def test_factorized_individual_helpers(self, chain):
        rep = rates.min_cut_coherent_info(*chain)
        values = {tuple(c): v for c, v in rep.cuts}
        assert values[("C1", "C2")] == pytest.approx(1 - S_R)
        assert values[()] == pytest.approx(H_QUARTER)
        assert rep.minimizing_cut == ["C1"]

    def test_guard(self):
        helpers = tuple(f"C{k}" for k in range(21))
        reg = Register(tuple([("A", 2), ("B", 2)] + [(h, 1) for h in helpers]))
        s = MultiState(reg, ket=np.eye(4)[0])
        with pytest.raises(TooManyHelpers):
            rates.min_cut_coherent_info(s, RoleMap("A", "B", helpers))


class TestChain:
    def test_bell_chain(self):
        s, _ = example_state("chain-2-repeaters")
        links = rates.links_from_state(s, CHAIN_LINKS["chain-2-repeaters"])
        assert rates.chain_hierarchical_rate(links) == pytest.approx(1.0)

    def test_factorized_equals_l(self, chain):
        links = rates.links_from_state(chain[0], CHAIN_LINKS["factorized-chain"])
        values = rates.chain_link_values(links)
        assert values == pytest.approx([H_QUARTER, 1 - S_R], abs=1e-12)
        assert rates.chain_hierarchical_rate(links) == pytest.approx(
            rates.assisted_lower_bound(*chain)["L"], abs=1e-9)

    def test_cnot_null_rate(self, corrupted):
        links = rates.links_from_state(corrupted[0], CHAIN_LINKS["cnot-corrupted"])
        assert rates.chain_link_values(links)[0] == pytest.approx(0.0, abs=1e-12)
        assert rates.chain_hierarchical_rate(links) == 0.0

    def test_empty(self):
        with pytest.raises(UsageError):
            rates.chain_hierarchical_rate([])


class TestFannes:
    def test_zero(self):
        assert rates.fannes_bound(0.0, 4) == 0.0

    def test_closed_form(self):
        assert rates.fannes_bound(0.1, 2) == pytest.approx(0.1 + 0.1 * math.log2(10), abs=1e-12)
        assert rates.fannes_bound(0.1, 2) == pytest.approx(0.43219, abs=1e-5)

    def test_branch_continuity(self):
        x = 1 / math.e
        left = x - x * math.log2(x)
        right = x + math.log2(math.e) / math.e
        assert left == pytest.approx(right, abs=1e-12)
        assert rates.fannes_bound(x, 2) == pytest.approx(left, abs=1e-12)
        assert rates.fannes_bound(x + 1e-13, 2) == pytest.approx(right, abs=1e-12)

    def test_bounds_entropy_gap(self, rng):
        for _ in range(50):
            r, s = random_density(rng, 3), random_density(rng, 3)
            eps = float(np.sum(np.abs(np.linalg.eigvalsh(r - s))))
            gap = abs(rates.entropy_of(r) - rates.entropy_of(s))
            assert gap <= rates.fannes_bound(eps, 3) + 1e-12

    def test_negative(self):
        with pytest.raises(UsageError):
            rates.fannes_bound(-0.1, 2)


class TestCutUpperBound:
    def test_pure_tripartite(self, rng):
        s = random_pure_state(rng, "A", "B", "C")
        rep = rates.cut_upper_bound_report(s, RoleMap("A", "B", ("C",)))
        assert rep["upper"] == pytest.approx(min(rates.von_neumann(s, "A"), rates.von_neumann(s, "B")), abs=1e-9)

    def test_bell(self):
        assert rates.cut_upper_bound_report(*example_state("maximally-entangled"))["upper"] == pytest.approx(1.0)

    def test_cq_is_above_exact_value(self, rng):
        from eoa.measure import cq_assistance

        s, roles = example_state("cq", p=(0.3, 0.7), states=("bell", "theta:0.4"))
        rep = rates.cut_upper_bound_report(s, roles)
        assert cq_assistance(s, roles) <= rep["upper"] + 1e-9
        assert any("relaxation" in n for n in rep.notes)


class TestProperties:
    def test_strong_subadditivity(self):
        rng = np.random.default_rng(1000)
        for _ in range(1000):
            s = random_mixed_state(rng, "A", "B", "C", rank=int(rng.integers(1, 9)))
            assert rates.coherent_info(s, "A", ["B", "C"]) >= rates.coherent_info(s, "A", "B") - 1e-9

    def test_l_below_i_a_bc(self):
        rng = np.random.default_rng(1001)
        for _ in range(200):
            s = random_mixed_state(rng, "A", "B", "C", rank=int(rng.integers(1, 9)))
            rep = rates.assisted_lower_bound(s, RoleMap("A", "B", ("C",)))
            assert rep["L"] <= rep["I(A>BC)"] + 1e-9

    def test_min_cut_bound_equals_pure_formula(self):
        rng = np.random.default_rng(1002)
        for _ in range(50):
            s = random_pure_state(rng, "A", "B", "C1", "C2")
            roles = RoleMap("A", "B", ("C1", "C2"))
            bound = rates.min_cut_coherent_info(s, roles)["bound"]
            assert bound == pytest.approx(rates.pure_collapse_value(s, roles), abs=1e-9)

    def test_cnot_robustness(self, chain, corrupted):
        for key in ("I(AC>B)", "I(A>BC)"):
            assert rates.assisted_lower_bound(*chain)[key] == pytest.approx(
                rates.assisted_lower_bound(*corrupted)[key], abs=1e-9)
        assert rates.coherent_info(chain[0], "A", "C1") == pytest.approx(H_QUARTER, abs=1e-12)
        assert rates.coherent_info(corrupted[0], "A", "C1") == pytest.approx(0.0, abs=1e-9)


class TestReportSerialization:
    def test_json_and_csv(self, chain):
        rep = rates.assisted_lower_bound(*chain)
        data = rep.to_json()
        assert data["quantities"]["L"] == 0.399123963
        csv_text = rep.to_csv()
        assert csv_text.splitlines()[0] == "name,value"
        assert "L,0.399123963" in csv_text.splitlines()
