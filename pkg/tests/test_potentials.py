import numpy as np
import pytest

from bgklab import (PotentialValidationError, check_potential,
                    make_potential_family, potential_from_callables)


class TestSin2Family:
    def test_symmetry_values(self):
        pot = make_potential_family("sin2", 0.7)
        assert pot.x0 == pytest.approx(0.5)
        assert pot.phi_max == pytest.approx(0.7)
        assert pot.phi(0.25) == pytest.approx(0.35, rel=1e-13)

    def test_corner_curvature_fd_oracle(self):
        a = 0.4
        pot = make_potential_family("sin2", a)
        h = 1e-5
        fd = (pot.phi(2 * h) - 2.0 * pot.phi(h) + pot.phi(0.0)) / h ** 2
        assert pot.d2phi(0.0) == pytest.approx(2.0 * np.pi ** 2 * a, rel=1e-12)
        assert fd == pytest.approx(2.0 * np.pi ** 2 * a, rel=1e-4)

    def test_period_criterion_positive(self):
        pot = make_potential_family("sin2", 1.3)
        entries = {c.pop("name") if "name" in c else None: c
                   for c in check_potential(pot)}
        assert entries["phi4s_period_criterion"]["passed"]

    def test_well_depth_matches_phi(self):
        pot = make_potential_family("sin2", 0.9)
        t = np.linspace(-0.3, 0.3, 41)
        assert np.allclose(pot.well_depth(t), pot.phi_max - pot.phi(0.5 + t),
                           atol=1e-14)

    def test_rejects_nonpositive_amplitude(self):
        with pytest.raises(ValueError):
            make_potential_family("sin2", 0.0)


class TestTiltedFamily:
    def test_asymmetric_curvatures(self):
        pot = make_potential_family("tilted_sin2", 0.5, {"tilt": 0.4})
        assert pot.x0 != pytest.approx(0.5, abs=1e-4)
        assert float(pot.d2phi(0.0)) != pytest.approx(float(pot.d2phi(1.0)), rel=1e-3)
        # curvature ratio follows the exponential tilt
        ratio = float(pot.d2phi(1.0)) / float(pot.d2phi(0.0))
        assert ratio == pytest.approx(np.exp(0.4), rel=1e-12)

    def test_validates(self):
        make_potential_family("tilted_sin2", 0.5, {"tilt": 0.3})


class TestValidation:
    def test_two_interior_maxima_rejected_with_witness(self):
        # two bumps: maxima near x = 1/4 and 3/4
        f = lambda x: np.sin(2 * np.pi * x) ** 2
        df = lambda x: 2 * np.pi * np.sin(4 * np.pi * x)
        d2f = lambda x: 8 * np.pi ** 2 * np.cos(4 * np.pi * x)
        d3f = lambda x: -32 * np.pi ** 3 * np.sin(4 * np.pi * x)
        with pytest.raises(PotentialValidationError) as err:
            potential_from_callables("two_bumps", f, df, d2f, d3f)
        names = [e["name"] for e in err.value.failures]
        assert any(n.startswith("phi1") or n.startswith("phi2") for n in names)

    def test_unvalidated_construction_allowed(self):
        f = lambda x: np.sin(2 * np.pi * x) ** 2
        df = lambda x: 2 * np.pi * np.sin(4 * np.pi * x)
        d2f = lambda x: 8 * np.pi ** 2 * np.cos(4 * np.pi * x)
        d3f = lambda x: -32 * np.pi ** 3 * np.sin(4 * np.pi * x)
        pot = potential_from_callables("two_bumps", f, df, d2f, d3f, validate=False)
        entries = {c["name"]: c for c in check_potential(pot)}
        bad = entries["phi1_unique_maximum"]
        assert not bad["passed"]
        assert bad["witness"] is not None

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            make_potential_family("cubic", 1.0)
