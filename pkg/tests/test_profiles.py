import numpy as np
import pytest
from scipy.integrate import quad

from bgklab import (boltzmannian, check_profile, even_nonmonotone, polytrope,
                    schamel)
from bgklab.profiles import tail_integral


class TestBoltzmannian:
    def test_values_at_origin(self):
        p = boltzmannian(1.0)
        assert p.mu(0.0) == pytest.approx(1.0)
        assert p.mu_prime(0.0) == pytest.approx(-1.0)

    def test_direct_evaluation(self):
        p = boltzmannian(2.0)
        assert p.mu(1.0) == pytest.approx(np.exp(-2.0), rel=1e-14)

    def test_tail_integral_closed_form(self):
        # int_0^inf beta e^(-beta e) sqrt(e) de = Gamma(3/2)/sqrt(beta)
        p = boltzmannian(1.0)
        ours = tail_integral(p)
        assert ours == pytest.approx(np.sqrt(np.pi) / 2.0, rel=1e-10)
        oracle, _ = quad(lambda e: np.exp(-e) * np.sqrt(e), 0.0, np.inf)
        assert ours == pytest.approx(oracle, rel=1e-10)

    def test_rejects_bad_beta(self):
        with pytest.raises(ValueError):
            boltzmannian(0.0)
        with pytest.raises(ValueError):
            boltzmannian(-1.0)


class TestPolytrope:
    def test_values(self):
        p = polytrope(0, -1.0)
        assert p.mu(0.0) == pytest.approx(1.0)
        assert p.mu(1.0) == pytest.approx(0.5)

    def test_monotone_sign_scan(self):
        # mu'(0) = 0 for k >= 1, but e -> e^(2k+1) is strictly increasing so
        # mu stays strictly decreasing; scan away from the single flat point
        p = polytrope(1, -2.0)
        e = np.concatenate([np.linspace(-1.9, -1e-6, 300),
                            np.geomspace(1e-6, 1e5, 300)])
        assert np.all(p.mu_prime(e) < 0)
        assert check_profile(p)["mu4_monotonicity"]["class"] == "decreasing"

    def test_rejects_bad_params(self):
        with pytest.raises(ValueError):
            polytrope(0, 0.5)
        with pytest.raises(ValueError):
            polytrope(-1, -1.0)


class TestEvenNonMonotone:
    def test_values_and_evenness(self):
        p = even_nonmonotone(1)
        assert p.mu(0.0) == pytest.approx(1.0)
        assert p.mu(1.0) == pytest.approx(0.5)
        assert p.mu(-1.0) == pytest.approx(0.5)

    def test_class(self):
        rep = check_profile(even_nonmonotone(1))
        assert rep["mu4_monotonicity"]["class"] == "increasing-decreasing"
        assert rep["mu4_monotonicity"]["passed"]

    def test_rejects_k0(self):
        with pytest.raises(ValueError):
            even_nonmonotone(0)


class TestSchamel:
    def test_continuity_alpha0(self):
        p = schamel(0.0, 1.0)
        assert p.mu(-1e-14) == pytest.approx(1.0, rel=1e-10)
        assert p.mu(1e-14) == pytest.approx(1.0, rel=1e-6)

    def test_alpha1_holder_but_not_c1(self):
        rep = check_profile(schamel(1.0, 1.0))
        assert rep["mu1_holder"]["passed"]
        assert np.isfinite(rep["mu1_holder"]["constant"])
        # |mu'(e)| sqrt(e) -> alpha * mu(0+) > 0, so the profile is irregular
        assert rep["regularity"]["class"] == "irregular"

    def test_alpha0_is_regular(self):
        rep = check_profile(schamel(0.0, 1.0))
        assert rep["regularity"]["class"] == "regular"

    def test_multibranch_values(self):
        p = schamel(1.0, 1.0, multibranch=True)
        assert p.mu(1.0, v_sign=1) == pytest.approx(np.exp(-4.0), rel=1e-14)
        assert p.mu(1.0, v_sign=-1) == pytest.approx(1.0, rel=1e-14)

    def test_multibranch_class(self):
        rep = check_profile(schamel(1.0, 1.0, multibranch=True))
        assert rep["mu4_monotonicity"]["passed"]
        assert rep["mu4_monotonicity"]["class"] == "per-branch"

    def test_rejects_bad_params(self):
        with pytest.raises(ValueError):
            schamel(-0.5, 1.0)
        with pytest.raises(ValueError):
            schamel(1.0, 0.0)


@pytest.mark.parametrize("profile", [
    boltzmannian(1.5), polytrope(1, -1.0), even_nonmonotone(2),
    schamel(0.7, 1.2), schamel(0.7, 1.2, multibranch=True),
])
def test_derivative_evaluators_consistent(profile):
    rep = check_profile(profile)
    assert rep["mu1_smoothness"]["passed"], rep["mu1_smoothness"]


@pytest.mark.parametrize("profile", [
    boltzmannian(1.0), polytrope(0, -1.0), even_nonmonotone(1), schamel(1.0, 1.0),
])
def test_structural_assumptions_hold(profile):
    rep = check_profile(profile)
    for key in ("mu1_continuity", "mu2_blowup", "mu3_tail", "mu4_monotonicity"):
        assert rep[key]["passed"], (key, rep[key])
