import math

import numpy as np
import pytest
import scipy.linalg

from eoa import densemat
from eoa.config import override
from eoa.errors import NoConvergence, NotHermitian, NotPSD

from conftest import random_density, random_hermitian


@pytest.mark.parametrize("method", ["lapack", "jacobi"])
class TestHermEig:
    def test_identity(self, method):
        res = densemat.herm_eig(np.eye(2), method)
        np.testing.assert_allclose(res.eigenvalues, [1, 1])

    def test_diagonal(self, method):
        res = densemat.herm_eig(np.diag([0.25, 0.75]), method)
        np.testing.assert_allclose(res.eigenvalues, [0.75, 0.25], atol=1e-15)

    def test_reduced_reference_closed_form(self, method):
        # trace 1, det 1/8 -> roots (1 +- sqrt(1/2)) / 2
        res = densemat.herm_eig([[0.75, 0.25], [0.25, 0.25]], method)
        expected = [(1 + math.sqrt(0.5)) / 2, (1 - math.sqrt(0.5)) / 2]
        np.testing.assert_allclose(res.eigenvalues, expected, atol=1e-12)
        np.testing.assert_allclose(res.eigenvalues, [0.85355339, 0.14644661], atol=1e-8)

    def test_eigenpairs_and_unitarity(self, method, rng):
        for d in (1, 2, 5, 9, 16):
            m = random_hermitian(rng, d)
            res = densemat.herm_eig(m, method)
            v, w = res.eigenvectors, res.eigenvalues
            assert np.all(np.diff(w) <= 1e-12)
            np.testing.assert_allclose(m @ v, v * w, atol=1e-10)
            np.testing.assert_allclose(v.conj().T @ v, np.eye(d), atol=1e-10)

    def test_rejects_non_hermitian(self, method):
        with pytest.raises(NotHermitian):
            densemat.herm_eig([[1, 1], [0, 1]], method)


def test_thousand_random_reconstructions():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        d = int(rng.integers(1, 17))
        m = random_hermitian(rng, d)
        res = densemat.herm_eig(m)
        assert np.max(np.abs(res.reconstruct() - m)) <= 1e-9
        assert np.max(np.abs(res.eigenvectors.conj().T @ res.eigenvectors - np.eye(d))) <= 1e-9


def test_jacobi_matches_lapack_spectrum(rng):
    for d in (3, 8, 12):
        m = random_hermitian(rng, d)
        np.testing.assert_allclose(
            densemat.herm_eig(m, "jacobi").eigenvalues, np.linalg.eigvalsh(m)[::-1], atol=1e-11
        )


def test_jacobi_degenerate_spectrum(rng):
    q, _ = np.linalg.qr(rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6)))
    m = q @ np.diag([2, 2, 2, -1, -1, 0.5]) @ q.conj().T
    res = densemat.herm_eig(m, "jacobi")
    np.testing.assert_allclose(res.eigenvalues, [2, 2, 2, 0.5, -1, -1], atol=1e-12)
    np.testing.assert_allclose(res.reconstruct(), m, atol=1e-12)


def test_jacobi_sweep_cap_raises(rng):
    with pytest.raises(NoConvergence):
        densemat.jacobi_eigh(random_hermitian(rng, 6), max_sweeps=1)


def test_global_eig_method_switch(rng):
    m = random_hermitian(rng, 4)
    with override(eig_method="jacobi"):
        w = densemat.eigvalsh(m)
    np.testing.assert_allclose(w, np.linalg.eigvalsh(m)[::-1], atol=1e-12)


class TestTraceNorm:
    def test_zero(self):
        assert densemat.trace_norm(np.zeros((3, 3))) == 0.0

    def test_signed_diagonal(self):
        assert densemat.trace_norm(np.diag([0.5, -0.5])) == pytest.approx(1.0)

    def test_state_difference(self):
        assert densemat.trace_norm(np.diag([1, 0]) - np.diag([0.5, 0.5])) == pytest.approx(1.0)

    def test_non_hermitian_uses_singular_values(self, rng):
        m = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        assert densemat.trace_norm(m) == pytest.approx(np.sum(np.linalg.svd(m, compute_uv=False)))


class TestFidelity:
    def test_self(self, rng):
        rho = random_density(rng, 4)
        assert densemat.fidelity(rho, rho) == pytest.approx(1.0, abs=1e-9)

    def test_orthogonal(self):
        assert densemat.fidelity(np.diag([1, 0]), np.diag([0, 1])) == pytest.approx(0.0, abs=1e-12)

    def test_commuting_closed_form(self):
        # F = sum sqrt(p_i q_i) = sqrt(1/2)
        assert densemat.fidelity(np.diag([1, 0]), np.diag([0.5, 0.5])) == pytest.approx(math.sqrt(0.5))

    def test_matches_scipy_sqrtm_and_symmetric(self, rng):
        for _ in range(20):
            r, s = random_density(rng, 3), random_density(rng, 3)
            sr = scipy.linalg.sqrtm(r)
            oracle = np.trace(scipy.linalg.sqrtm(sr @ s @ sr)).real
            assert densemat.fidelity(r, s) == pytest.approx(oracle, abs=1e-8)
            assert abs(densemat.fidelity(r, s) - densemat.fidelity(s, r)) <= 1e-9

    def test_rejects_negative_operator(self):
        with pytest.raises(NotPSD):
            densemat.fidelity(np.diag([1.2, -0.2]), np.diag([1, 0]))

    def test_tiny_negative_is_clamped(self):
        assert densemat.fidelity(np.diag([1 + 5e-10, -5e-10]), np.diag([1, 0])) == pytest.approx(1.0)


class TestPurifiedDistance:
    def test_self(self, rng):
        rho = random_density(rng, 3)
        assert densemat.purified_distance(rho, rho) == pytest.approx(0.0, abs=1e-7)

    def test_orthogonal(self):
        assert densemat.purified_distance(np.diag([1, 0]), np.diag([0, 1])) == pytest.approx(1.0)

    def test_subnormalized_cross_term(self):
        # F = 0, generalized fidelity = sqrt(1/2 * 1/2) = 1/2
        p = densemat.purified_distance(0.5 * np.diag([1, 0]), 0.5 * np.diag([0, 1]))
        assert p == pytest.approx(math.sqrt(0.75))


def test_distance_sandwiches_on_thousand_pairs():
    rng = np.random.default_rng(77)
    for _ in range(1000):
        d = int(rng.integers(2, 5))
        r = random_density(rng, d, rank=int(rng.integers(1, d + 1)))
        s = random_density(rng, d, rank=int(rng.integers(1, d + 1)))
        f = densemat.fidelity(r, s)
        dist = densemat.trace_distance(r, s)
        p = densemat.purified_distance(r, s)
        assert 1 - f <= dist + 1e-8
        assert dist <= math.sqrt(max(1 - f * f, 0.0)) + 1e-8
        assert dist <= p + 1e-8
        assert p <= 2 * math.sqrt(dist) + 1e-8
