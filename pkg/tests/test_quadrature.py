import numpy as np
import pytest
from scipy.integrate import quad

from bgklab import make_potential_family
from bgklab.quadrature import (adaptive_gl, corner_integral,
                               cos_stretch_integral, fixed_gl,
                               invert_decreasing, invert_increasing,
                               mid_integral)


def test_fixed_gl_polynomial():
    assert fixed_gl(lambda x: x ** 2, 0.0, 1.0, 8) == pytest.approx(1.0 / 3.0, rel=1e-14)


def test_adaptive_gl_smooth():
    val = adaptive_gl(np.sin, 0.0, np.pi, rtol=1e-13)
    assert val == pytest.approx(2.0, rel=1e-12)


@pytest.mark.parametrize("b", [0.1, 1.0, 10.0, 1e6])
def test_inverse_sqrt_quadratic_identity(b):
    # int_0^b dx/sqrt(x + x^2) = acosh(2b + 1)
    #                          = log(b) + 2 log(1 + sqrt((b+1)/b)),
    # checked through the package quadrature after x = z^2; the half-log
    # form log(b)/2 + log(1 + sqrt((b+1)/b)) is the half-integral
    f = lambda z: 2.0 / np.sqrt(1.0 + z * z)
    val = adaptive_gl(f, 0.0, min(np.sqrt(b), 1.0), rtol=1e-14, n_max=16384)
    if b > 1.0:
        # log-stretch the far piece so one panel resolves all scales
        g = lambda w: np.exp(w) * f(np.exp(w))
        val += adaptive_gl(g, 0.0, 0.5 * np.log(b), rtol=1e-14, n_max=16384)
    half_form = 0.5 * np.log(b) + np.log(1.0 + np.sqrt((b + 1.0) / b))
    assert val == pytest.approx(np.arccosh(2.0 * b + 1.0), rel=1e-12)
    assert val == pytest.approx(2.0 * half_form, rel=1e-12)


def test_invert_monotone_branches():
    f = lambda x: np.sin(np.pi * x) ** 2
    x = invert_increasing(f, 0.0, 0.5, 0.25)
    assert f(x) == pytest.approx(0.25, abs=1e-13)
    x = invert_decreasing(f, 0.5, 1.0, 0.25)
    assert f(x) == pytest.approx(0.25, abs=1e-13)
    assert x > 0.5


class TestOrbitKernels:
    pot = make_potential_family("sin2", 1.0)

    def _brute(self, E, a, b, p):
        val, _ = quad(lambda x: (2.0 * (E + float(self.pot.phi(x)))) ** (-p),
                      a, b, epsabs=1e-14, epsrel=1e-13, limit=400)
        return val

    def test_corner_left_exterior(self):
        E = 0.01
        ours = corner_integral(self.pot, E, "left", 0.2, p=0.5)
        ref = self._brute(E, 0.0, 0.2, 0.5)
        assert ours == pytest.approx(ref, rel=1e-10)

    def test_corner_right_exterior_p32(self):
        E = 0.05
        ours = corner_integral(self.pot, E, "right", 0.8, p=1.5)
        ref = self._brute(E, 0.8, 1.0, 1.5)
        assert ours == pytest.approx(ref, rel=1e-10)

    def test_corner_left_trapped(self):
        # below the separatrix the piece starts at the turning point
        from bgklab.action_angle import turning_points
        E = -0.05
        xm, _ = turning_points(self.pot, E)
        ours = corner_integral(self.pot, E, "left", 0.2, p=0.5)
        ref, _ = quad(lambda x: (2.0 * (E + float(self.pot.phi(x)))) ** -0.5,
                      xm, 0.2, epsabs=1e-14, epsrel=1e-13, limit=400,
                      points=[xm])
        assert ours == pytest.approx(ref, rel=1e-9)

    def test_cos_stretch_full_orbit(self):
        from bgklab.action_angle import turning_points
        E = -0.5
        xm, xp = turning_points(self.pot, E)
        ours = cos_stretch_integral(self.pot, E, xm, xp, rtol=1e-12)
        ref, _ = quad(lambda x: (2.0 * (E + float(self.pot.phi(x)))) ** -0.5,
                      xm, xp, epsabs=1e-13, epsrel=1e-12, limit=400,
                      points=[xm, xp])
        assert ours == pytest.approx(ref, rel=1e-9)

    def test_mid_integral_weighted(self):
        E = -0.3
        w = lambda x: np.cos(x)
        ours = mid_integral(self.pot, E, 0.35, 0.65, p=0.5, weight=w, rtol=1e-12)
        ref, _ = quad(lambda x: np.cos(x) * (2.0 * (E + float(self.pot.phi(x)))) ** -0.5,
                      0.35, 0.65, epsabs=1e-14, epsrel=1e-13)
        assert ours == pytest.approx(ref, rel=1e-11)
