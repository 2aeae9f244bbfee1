import numpy as np
import pytest

from riccati_place.errors import UnstableGenerator
from riccati_place.linalg import matrix_exponential, operator_norm
from riccati_place.semigroup import (
    StabilityCertificate,
    certificate_holds,
    certify_stability,
    perturbed_certificate,
)

from conftest import rand_psd, rand_stable, rand_stable_symmetric


class TestCertifyStability:
    def test_normal_diagonal(self):
        cert = certify_stability(np.diag([-1.0, -2.0]))
        assert abs(cert.alpha - 0.95) < 1e-12
        assert 1.0 <= cert.M <= 1.01 + 1e-12

    def test_non_normal_transient_growth(self):
        cert = certify_stability(np.array([[-1.0, 10.0], [0.0, -1.0]]))
        assert cert.M > 1.0
        assert abs(cert.alpha - 0.95) < 1e-12

    def test_scalar(self):
        cert = certify_stability(np.array([[-1.0]]))
        assert abs(cert.alpha - 0.95) < 1e-12
        assert cert.M <= 1.011

    def test_alpha_below_abscissa(self, rng):
        for _ in range(5):
            A = rand_stable(5, rng)
            cert = certify_stability(A)
            sigma = np.max(np.linalg.eigvals(A).real)
            assert cert.alpha <= -sigma + 1e-12

    def test_unstable_rejected(self):
        with pytest.raises(UnstableGenerator):
            certify_stability(np.array([[0.0]]))
        with pytest.raises(UnstableGenerator):
            certify_stability(np.array([[1.0, 0.0], [0.0, -2.0]]))

    def test_soundness_on_fresh_grid(self, rng):
        # the decay inequality holds at every fresh verification point
        for _ in range(5):
            A = rand_stable(6, rng)
            cert = certify_stability(A)
            ts = rng.uniform(0.0, cert.sample_horizon, 64)
            for t in ts:
                nrm = operator_norm(matrix_exponential(A, t))
                assert nrm <= cert.M * np.exp(-cert.alpha * t) * (1.0 + 1e-9)


class TestPerturbedCertificate:
    def test_scalar_shift(self):
        A = np.array([[-1.0]])
        cert = certify_stability(A)
        pc = perturbed_certificate(cert, A, np.array([[1.0]]))
        assert abs(pc.alpha - 1.9) < 1e-12
        assert pc.M <= 1.011
        assert pc.unperturbed_bound_holds is True

    def test_zero_perturbation_matches_plain_certificate(self, rng):
        A = rand_stable_symmetric(4, rng)
        cert = certify_stability(A)
        pc = perturbed_certificate(cert, A, np.zeros((4, 4)))
        assert pc.M == cert.M and pc.alpha == cert.alpha
        assert pc.unperturbed_bound_holds is True

    def test_normal_case_example(self):
        A = np.diag([-1.0, -2.0])
        cert = certify_stability(A)
        pc = perturbed_certificate(cert, A, np.diag([0.5, 0.5]))
        assert abs(pc.alpha - 0.95 * 1.5) < 1e-12
        assert pc.M <= 1.011
        assert pc.unperturbed_bound_holds is True

    def test_rejects_non_psd_perturbation(self):
        A = np.array([[-2.0]])
        cert = certify_stability(A)
        with pytest.raises(ValueError):
            perturbed_certificate(cert, A, np.array([[-1.0]]))

    def test_rejects_certificate_for_wrong_matrix(self):
        A = np.array([[-1.0]])
        fake = StabilityCertificate(M=1.0, alpha=5.0, sample_horizon=4.0, sample_count=500)
        with pytest.raises(ValueError):
            perturbed_certificate(fake, A, np.array([[0.5]]))

    def test_alpha_monotone_under_psd_perturbation_symmetric(self, rng):
        for _ in range(8):
            A = rand_stable_symmetric(5, rng)
            K = rand_psd(5, rng)
            a0 = certify_stability(A).alpha
            a1 = certify_stability(A - K).alpha
            assert a1 >= a0 - 1e-9


def test_certificate_holds_helper(rng):
    A = rand_stable(4, rng)
    cert = certify_stability(A)
    assert certificate_holds(cert, A)
    assert not certificate_holds(
        StabilityCertificate(M=cert.M, alpha=10.0 * cert.alpha,
                             sample_horizon=cert.sample_horizon, sample_count=100),
        A)
