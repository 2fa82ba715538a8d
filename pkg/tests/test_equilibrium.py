import numpy as np
import pytest

from bgklab import (boltzmannian, even_nonmonotone, ion_density,
                    make_equilibrium, make_potential_family, poisson_residual,
                    schamel, verify_assumptions)
from bgklab.equilibrium import (forced_homogeneous_defect,
                                ion_density_trapezoid)
from bgklab.potentials import potential_from_callables


@pytest.fixture(scope="module")
def small_amp_eq():
    # amplitude below the existence margin for beta = 1, so rho_+ > 0
    pot = make_potential_family("sin2", 0.1)
    return make_equilibrium(boltzmannian(1.0), pot, eps=0.05, n_x=256)


class TestIonDensity:
    def test_small_eps_limit_is_curvature_plus_constant(self):
        # eps * int mu(eps^2(v^2/2 - phi)) dv -> int mu(w^2/2) dw, an
        # x-independent constant, so rho_+ + phi'' approaches a constant
        pot = make_potential_family("sin2", 0.1)
        mu = boltzmannian(1.0)
        xs = np.linspace(0.05, 0.95, 7)
        for eps in (0.2, 0.05):
            rho = ion_density((mu, pot, eps), xs)
            shifted = rho + pot.d2phi(xs)
            drift = np.max(shifted) - np.min(shifted)
            # the x-dependence enters at order eps^2 * phi
            assert drift < 2.0 * eps ** 2 * pot.phi_max * np.sqrt(2 * np.pi)
        rho = ion_density((mu, pot, 0.01), xs)
        assert np.allclose(rho + pot.d2phi(xs), np.sqrt(2.0 * np.pi), rtol=1e-4)

    def test_against_wide_grid_trapezoid(self):
        pot = make_potential_family("sin2", 0.5)
        eq = make_equilibrium(boltzmannian(1.0), pot, eps=0.1, n_x=64)
        # compare on the oracle's own truncation window
        eq_win = type(eq)(profile=eq.profile, potential=eq.potential, eps=eq.eps,
                          x_grid=eq.x_grid, rho_plus=eq.rho_plus, e_min=eq.e_min,
                          v_max=50.0)
        ours = ion_density(eq_win, 0.5)
        oracle = ion_density_trapezoid(eq_win, 0.5, n_v=1 << 17)
        assert ours == pytest.approx(oracle, rel=1e-8)

    def test_positivity_scan(self, small_amp_eq):
        assert np.all(small_amp_eq.rho_plus > 0)

    def test_schamel_routes_agree(self):
        pot = make_potential_family("sin2", 0.3)
        eq = make_equilibrium(schamel(1.0, 1.0, multibranch=True), pot,
                              eps=0.1, n_x=32)
        ours = ion_density(eq, eq.x_grid[::8])
        oracle = ion_density_trapezoid(eq, eq.x_grid[::8], n_v=1 << 17)
        # trapezoid converges slowly through the Hoelder kink; loose bound
        assert np.allclose(ours, oracle, rtol=2e-6)


class TestEquilibrium:
    def test_poisson_self_consistency(self, small_amp_eq):
        assert poisson_residual(small_amp_eq) < 1e-8

    def test_evenness_single_branch(self, small_amp_eq):
        x = np.array([0.2, 0.37, 0.61])
        v = np.array([0.4, 1.3, 2.2])
        assert np.allclose(small_amp_eq.f0(x, v), small_amp_eq.f0(x, -v))

    def test_multibranch_asymmetry(self):
        pot = make_potential_family("sin2", 0.3)
        eq = make_equilibrium(schamel(1.0, 1.0, multibranch=True), pot,
                              eps=0.2, n_x=32)
        # above the separatrix the branches differ
        x, v = 0.05, 3.0 / 0.2
        assert eq.f0(x, v) != pytest.approx(eq.f0(x, -v), rel=1e-3)

    def test_rejects_bad_eps(self):
        pot = make_potential_family("sin2", 0.1)
        with pytest.raises(ValueError):
            make_equilibrium(boltzmannian(1.0), pot, eps=0.0)

    def test_rejects_shallow_domain(self):
        # polytrope domain (h, inf) must contain the trapped energies
        from bgklab import polytrope
        pot = make_potential_family("sin2", 0.5)
        with pytest.raises(ValueError):
            make_equilibrium(polytrope(0, -1e-4), pot, eps=0.1)


class TestForcedHomogeneity:
    def test_defect_strictly_positive_for_monotone(self, small_amp_eq):
        # with mu' < 0 the would-be constant-background identity
        # int |phi'|^2 - eps * intint mu' |phi'|^2 = 0 cannot hold: the
        # left side exceeds int |phi'|^2 > 0
        defect = forced_homogeneous_defect(small_amp_eq)
        base = float(np.mean(small_amp_eq.potential.dphi(small_amp_eq.x_grid) ** 2))
        assert defect > base > 0


class TestVerifyAssumptions:
    def test_canonical_pair_passes(self, small_amp_eq):
        rep = verify_assumptions(small_amp_eq, check_period=True)
        failed = {k: v for k, v in rep["entries"].items() if not v.get("passed", True)}
        assert rep["all_passed"], failed
        assert rep["classification"] == "regular"

    def test_two_maxima_fails_with_witness(self):
        f = lambda x: 0.1 * np.sin(2 * np.pi * x) ** 2
        df = lambda x: 0.1 * 2 * np.pi * np.sin(4 * np.pi * x)
        d2f = lambda x: 0.1 * 8 * np.pi ** 2 * np.cos(4 * np.pi * x)
        d3f = lambda x: -0.1 * 32 * np.pi ** 3 * np.sin(4 * np.pi * x)
        pot = potential_from_callables("two_bumps", f, df, d2f, d3f, validate=False)
        eq = make_equilibrium(boltzmannian(1.0), pot, eps=0.05, n_x=128)
        rep = verify_assumptions(eq, check_period=False)
        entry = rep["entries"]["phi1_unique_maximum"]
        assert not entry["passed"]
        assert entry["witness"] is not None

    def test_irregular_profile_marked(self):
        pot = make_potential_family("sin2", 0.1)
        eq = make_equilibrium(schamel(1.0, 1.0), pot, eps=0.05, n_x=128)
        rep = verify_assumptions(eq, check_period=False)
        assert rep["entries"]["mu1_holder"]["passed"]
        assert rep["classification"] == "irregular"

    def test_large_amplitude_breaks_positivity(self):
        # amplitude above the existence margin: the report flags it
        pot = make_potential_family("sin2", 0.5)
        eq = make_equilibrium(boltzmannian(1.0), pot, eps=0.05, n_x=256)
        rep = verify_assumptions(eq, check_period=False)
        assert not rep["entries"]["phi3_existence"]["passed"]
        assert not rep["entries"]["rho_plus_positive"]["passed"]
        assert rep["entries"]["rho_plus_positive"]["witness"] is not None

    def test_nonmonotone_class_reported(self):
        pot = make_potential_family("sin2", 0.1)
        eq = make_equilibrium(even_nonmonotone(1), pot, eps=0.05, n_x=128)
        rep = verify_assumptions(eq, check_period=False)
        assert rep["entries"]["mu4_monotonicity"]["class"] == "increasing-decreasing"
