"""Action-angle machinery for the characteristic flow x' = v, v' = phi'(x).

Trapped orbits (E_min < E < 0) close around the top of the well; energies
above the separatrix wind around the torus.  The module computes turning
points, the orbit period T and its first two energy derivatives, the
angle coordinate, the inverse chart, and tabulates everything on an
energy grid clustered at the elliptic bottom and the separatrix.

T'(E) and T''(E) below the separatrix are evaluated from the
turning-point-free integral representations

    T'(E)  = (E - E_min)^-1  int G(x)  / sqrt(2(E+phi)) dx
    T''(E) = (E - E_min)^-2  int G1'(x) (E + E_min + 2 phi) / sqrt(2(E+phi)) dx

with G = (phi'^2 - 2 phi'' (phi - phi(x0))) / phi'^2 (zero at the top) and
G1 = G/phi'; above the separatrix they are plain differentiated
quadratures with kernel powers 3/2 and 5/2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .equilibrium import Equilibrium
from .potentials import PotentialProfile
from .quadrature import (adaptive_gl, corner_integral, cos_stretch_integral,
                         invert_decreasing, invert_increasing, mid_integral)

__all__ = [
    "ChartError",
    "choose_estar",
    "convexity_window_ok",
    "turning_points",
    "period",
    "period_deriv",
    "period_deriv2",
    "angle",
    "from_action_angle",
    "orbit_energy",
    "chart_energy_derivative",
    "ActionAngleChart",
    "build_chart",
]

SINGULAR_GUARD = 1e-14


class ChartError(ValueError):
    pass


# ---------------------------------------------------------------------------
# separatrix-side convexity window
# ---------------------------------------------------------------------------

def convexity_window_ok(pot: PotentialProfile, estar: float, n: int = 1024) -> bool:
    """phi'' > 0 on [0, x_-(estar)] and [x_+(estar), 1]."""
    if not (-pot.phi_max < estar < 0.0):
        return False
    xm, xp = turning_points(pot, estar)
    left = np.linspace(0.0, xm, n)
    right = np.linspace(xp, 1.0, n)
    return bool(np.all(pot.d2phi(left) > 0.0) and np.all(pot.d2phi(right) > 0.0))


def choose_estar(eq_or_pot) -> float:
    """Reference energy separating the elliptic and hyperbolic regimes.

    Takes -phi(x_c)/2 at the inflection point x_c nearest each corner and
    keeps the smaller well depth, then verifies the convexity window.
    """
    pot = eq_or_pot.potential if isinstance(eq_or_pot, Equilibrium) else eq_or_pot
    xs_l = np.linspace(1e-6, pot.x0 - 1e-6, 2048)
    d2 = pot.d2phi(xs_l)
    flips = np.nonzero(np.sign(d2[:-1]) != np.sign(d2[1:]))[0]
    if len(flips) == 0 or d2[0] <= 0.0:
        raise ChartError("no convexity window: phi has no inflection point left of x0")
    i = flips[0]
    xc_l = brentq(pot.d2phi, xs_l[i], xs_l[i + 1], xtol=1e-14)

    xs_r = np.linspace(pot.x0 + 1e-6, 1.0 - 1e-6, 2048)
    d2 = pot.d2phi(xs_r)
    flips = np.nonzero(np.sign(d2[:-1]) != np.sign(d2[1:]))[0]
    if len(flips) == 0 or d2[-1] <= 0.0:
        raise ChartError("no convexity window: phi has no inflection point right of x0")
    i = flips[-1]
    xc_r = brentq(pot.d2phi, xs_r[i], xs_r[i + 1], xtol=1e-14)

    estar = -0.5 * min(float(pot.phi(xc_l)), float(pot.phi(xc_r)))
    if not convexity_window_ok(pot, estar):
        raise ChartError("convexity window check failed at the proposed reference energy")
    return estar


# ---------------------------------------------------------------------------
# turning points
# ---------------------------------------------------------------------------

def _turning_offsets(pot: PotentialProfile, E: float):
    """Turning points as offsets from the top, solving depth(t) = E - e_min.

    Newton in offset coordinates never round-trips through x, so the
    residual stays at the rounding unit of the offsets themselves; this is
    what keeps the kinetic factor consistent when the orbit width is far
    below ulp(x0).
    """
    ee = E + pot.phi_max
    xm = invert_increasing(pot.phi, 0.0, pot.x0, -E)
    xp = invert_decreasing(pot.phi, pot.x0, 1.0, -E)
    tm = xm - pot.x0
    tp = xp - pot.x0
    for _ in range(3):
        tm += (float(pot.well_depth(tm)) - ee) / float(pot.dphi(pot.x0 + tm))
        tp += (float(pot.well_depth(tp)) - ee) / float(pot.dphi(pot.x0 + tp))
    # bias inward so ee - depth >= 0 holds at float level on [tm, tp]
    for _ in range(8):
        if float(pot.well_depth(tm)) <= ee:
            break
        tm = np.nextafter(tm, 0.0)
    for _ in range(8):
        if float(pot.well_depth(tp)) <= ee:
            break
        tp = np.nextafter(tp, 0.0)
    return float(tm), float(tp)


def turning_points(pot: PotentialProfile, E: float):
    """Solve phi(x) = -E on both monotone branches (E in the trapped range)."""
    e_min = -pot.phi_max
    if not (e_min < E < 0.0):
        raise ChartError(f"turning points need E in ({e_min}, 0); got {E}")
    if pot.well_depth is not None:
        tm, tp = _turning_offsets(pot, E)
        return float(pot.x0 + tm), float(pot.x0 + tp)
    target = -E
    xm = invert_increasing(pot.phi, 0.0, pot.x0, target)
    xp = invert_decreasing(pot.phi, pot.x0, 1.0, target)
    # one Newton polish on each side
    for _ in range(2):
        xm -= (float(pot.phi(xm)) - target) / float(pot.dphi(xm))
        xp -= (float(pot.phi(xp)) - target) / float(pot.dphi(xp))
    xm = min(max(xm, 0.0), pot.x0)
    xp = min(max(xp, pot.x0), 1.0)
    # bias inward so E + phi >= 0 holds at float level on [xm, xp]
    for _ in range(8):
        if float(pot.phi(xm)) >= target:
            break
        xm = np.nextafter(xm, pot.x0)
    for _ in range(8):
        if float(pot.phi(xp)) >= target:
            break
        xp = np.nextafter(xp, pot.x0)
    return float(xm), float(xp)


# ---------------------------------------------------------------------------
# the weights entering T' and T''
# ---------------------------------------------------------------------------

G_PATCH = 1e-5
G1P_PATCH = 2e-3
G1P_STEP = 5e-4


def g_weight(pot: PotentialProfile, x):
    """(phi'^2 - 2 phi''(phi - phi(x0)))/phi'^2 with its removable zero at x0."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    t = x - pot.x0
    out = np.empty(x.shape)
    far = np.abs(t) >= G_PATCH
    if np.any(far):
        xf = x[far]
        dp = pot.dphi(xf)
        out[far] = (dp * dp - 2.0 * pot.d2phi(xf) * (pot.phi(xf) - pot.phi_max)) / (dp * dp)
    if np.any(~far):
        g1_top = -float(pot.d3phi(pot.x0)) / (3.0 * float(pot.d2phi(pot.x0)) ** 2)
        out[~far] = g1_top * pot.dphi(x[~far])
    return out


def g1_weight(pot: PotentialProfile, x):
    """G/phi', continuous across the top."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    t = x - pot.x0
    out = np.empty(x.shape)
    far = np.abs(t) >= G_PATCH
    if np.any(far):
        out[far] = g_weight(pot, x[far]) / pot.dphi(x[far])
    if np.any(~far):
        out[~far] = -float(pot.d3phi(pot.x0)) / (3.0 * float(pot.d2phi(pot.x0)) ** 2)
    return out


def g1prime_weight(pot: PotentialProfile, x):
    """d/dx (G/phi'); the closed form loses digits right at the top, where a
    five-point stencil on G1 takes over."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    t = x - pot.x0
    out = np.empty(x.shape)
    far = np.abs(t) >= G1P_PATCH
    if np.any(far):
        xf = x[far]
        dp = pot.dphi(xf)
        dphi_c = pot.phi(xf) - pot.phi_max
        out[far] = (6.0 * dphi_c * pot.d2phi(xf) ** 2
                    - 2.0 * pot.d3phi(xf) * dphi_c * dp
                    - 3.0 * dp * dp * pot.d2phi(xf)) / dp ** 4
    if np.any(~far):
        xn = x[~far]
        h = G1P_STEP
        out[~far] = (-g1_weight(pot, xn + 2 * h) + 8.0 * g1_weight(pot, xn + h)
                     - 8.0 * g1_weight(pot, xn - h) + g1_weight(pot, xn - 2 * h)) / (12.0 * h)
    return out


# ---------------------------------------------------------------------------
# period function and derivatives
# ---------------------------------------------------------------------------

def _check_energy(pot: PotentialProfile, E: float) -> None:
    scale = pot.phi_max
    if abs(E) < SINGULAR_GUARD * scale:
        raise ChartError(f"energy {E} is numerically on the separatrix")
    if E < 0.0 and E + pot.phi_max < SINGULAR_GUARD * scale:
        raise ChartError(f"energy {E} is numerically at the elliptic bottom")


def _trapped_pieces(pot, estar, E, weight, rtol, fixed_n, corner_n):
    """int_{x_-}^{x_+} W / sqrt(2(E+phi)) dx for E in the trapped range."""
    if E > estar:
        xms, xps = turning_points(pot, estar)
        n = fixed_n or corner_n
        left = corner_integral(pot, E, "left", xms, p=0.5, weight=weight, n=n)
        right = corner_integral(pot, E, "right", xps, p=0.5, weight=weight, n=n)
        mid = mid_integral(pot, E, xms, xps, p=0.5, weight=weight,
                           rtol=rtol, fixed_n=fixed_n)
        return left + mid + right
    if pot.well_depth is not None:
        t_bounds = _turning_offsets(pot, E)
        return cos_stretch_integral(pot, E, 0.0, 0.0, weight=weight,
                                    rtol=rtol, fixed_n=fixed_n,
                                    t_bounds=t_bounds)
    xm, xp = turning_points(pot, E)
    return cos_stretch_integral(pot, E, xm, xp, weight=weight,
                                rtol=rtol, fixed_n=fixed_n)


def _exterior_pieces(pot, estar, E, p, weight, rtol, fixed_n, corner_n):
    """int_0^1 W * (2(E+phi))^(-p) dx for E above the separatrix."""
    xms, xps = turning_points(pot, estar)
    n = fixed_n or corner_n
    left = corner_integral(pot, E, "left", xms, p=p, weight=weight, n=n)
    right = corner_integral(pot, E, "right", xps, p=p, weight=weight, n=n)
    mid = mid_integral(pot, E, xms, xps, p=p, weight=weight,
                       rtol=rtol, fixed_n=fixed_n)
    return left + mid + right


def period(pot: PotentialProfile, estar: float, E: float,
           rtol: float = 1e-11, fixed_n: int | None = None,
           corner_n: int = 160) -> float:
    """Orbit period T(E): twice the half-orbit time below the separatrix,
    the single-traversal time above it."""
    _check_energy(pot, E)
    if E < 0.0:
        return 2.0 * _trapped_pieces(pot, estar, E, None, rtol, fixed_n, corner_n)
    return _exterior_pieces(pot, estar, E, 0.5, None, rtol, fixed_n, corner_n)


def period_deriv(pot: PotentialProfile, estar: float, E: float,
                 rtol: float = 1e-11, fixed_n: int | None = None,
                 corner_n: int = 160) -> float:
    _check_energy(pot, E)
    if E < 0.0:
        w = lambda x: g_weight(pot, x)
        val = _trapped_pieces(pot, estar, E, w, rtol, fixed_n, corner_n)
        return val / (E + pot.phi_max)
    return -_exterior_pieces(pot, estar, E, 1.5, None, rtol, fixed_n, corner_n)


def period_deriv2(pot: PotentialProfile, estar: float, E: float,
                  rtol: float = 1e-11, fixed_n: int | None = None,
                  corner_n: int = 160) -> float:
    _check_energy(pot, E)
    if E < 0.0:
        e_min = -pot.phi_max

        def w(x):
            return g1prime_weight(pot, x) * (E + e_min + 2.0 * pot.phi(x))

        val = _trapped_pieces(pot, estar, E, w, rtol, fixed_n, corner_n)
        return val / (E - e_min) ** 2
    return 3.0 * _exterior_pieces(pot, estar, E, 2.5, None, rtol, fixed_n, corner_n)


# ---------------------------------------------------------------------------
# angle coordinate and inverse chart
# ---------------------------------------------------------------------------

def _orbit_time(pot, estar, E, x, rtol, corner_n=160):
    """Time along the v >= 0 branch from the left turning point (E < 0) or
    the corner x = 0 (E > 0) to position x."""
    if E < 0.0:
        xm, xp = turning_points(pot, E)
        x = min(max(x, xm), xp)
        if E > estar:
            xms, xps = turning_points(pot, estar)
            if x <= xms:
                return corner_integral(pot, E, "left", x, p=0.5, n=corner_n)
            t = corner_integral(pot, E, "left", xms, p=0.5, n=corner_n)
            if x <= xps:
                return t + mid_integral(pot, E, xms, x, p=0.5, rtol=rtol)
            t += mid_integral(pot, E, xms, xps, p=0.5, rtol=rtol)
            t += (corner_integral(pot, E, "right", xps, p=0.5, n=corner_n)
                  - corner_integral(pot, E, "right", x, p=0.5, n=corner_n))
            return t
        if x <= pot.x0:
            return cos_stretch_integral(pot, E, xm, x, rtol=rtol)
        half = cos_stretch_integral(pot, E, xm, xp, rtol=rtol)
        return half - cos_stretch_integral(pot, E, x, xp, rtol=rtol)
    # exterior
    x = min(max(x, 0.0), 1.0)
    xms, xps = turning_points(pot, estar)
    if x <= xms:
        return corner_integral(pot, E, "left", x, p=0.5, n=corner_n)
    t = corner_integral(pot, E, "left", xms, p=0.5, n=corner_n)
    if x <= xps:
        return t + mid_integral(pot, E, xms, x, p=0.5, rtol=rtol)
    t += mid_integral(pot, E, xms, xps, p=0.5, rtol=rtol)
    t += (corner_integral(pot, E, "right", xps, p=0.5, n=corner_n)
          - corner_integral(pot, E, "right", x, p=0.5, n=corner_n))
    return t


def angle(pot: PotentialProfile, estar: float, x: float, v: float,
          T: float | None = None, rtol: float = 1e-11) -> float:
    """Angle in [0, 1) of the phase-space point (x, v).

    Below the separatrix the v >= 0 half-orbit covers [0, 1/2] and the
    v < 0 half is its reflection; above it the angle depends on x alone.
    """
    E = 0.5 * v * v - float(pot.phi(x))
    _check_energy(pot, E)
    if T is None:
        T = period(pot, estar, E, rtol=rtol)
    th = _orbit_time(pot, estar, E, float(x), rtol) / T
    if E < 0.0 and v < 0.0:
        return (1.0 - th) % 1.0
    return th % 1.0


def from_action_angle(pot: PotentialProfile, estar: float, theta: float, E: float,
                      branch: int = 1, T: float | None = None,
                      rtol: float = 1e-12):
    """Invert the chart: integrate the characteristics for time theta*T.

    branch selects the sign of v above the separatrix; below it the
    reflection symmetry handles theta > 1/2.
    """
    _check_energy(pot, E)
    if abs(E) < 1e-10 * pot.phi_max:
        raise ChartError("inverse chart is ill-conditioned this close to the separatrix")
    if T is None:
        T = period(pot, estar, E, rtol=1e-11)
    th = theta % 1.0

    def rhs(s, y):
        return (y[1], float(pot.dphi(y[0])))

    if E < 0.0:
        mirror = th > 0.5
        if mirror:
            th = 1.0 - th
        xm, _ = turning_points(pot, E)
        if th == 0.0:
            x, v = xm, 0.0
        else:
            sol = solve_ivp(rhs, (0.0, th * T), (xm, 0.0), method="DOP853",
                            rtol=rtol, atol=1e-13)
            x, v = float(sol.y[0, -1]), float(sol.y[1, -1])
        if mirror:
            v = -v
        return x, v

    v0 = np.sqrt(2.0 * E)
    if th == 0.0:
        x, v = 0.0, v0
    else:
        sol = solve_ivp(rhs, (0.0, th * T), (0.0, v0), method="DOP853",
                        rtol=rtol, atol=1e-13)
        x, v = float(sol.y[0, -1]), float(sol.y[1, -1])
    if branch < 0:
        v = -v
    return x % 1.0, v


def orbit_energy(pot: PotentialProfile, x: float, v: float) -> float:
    return 0.5 * v * v - float(pot.phi(x))


def chart_energy_derivative(pot: PotentialProfile, estar: float, theta: float,
                            E: float, h: float | None = None):
    """|dx/dE| at fixed angle, by centred differences of the inverse chart."""
    e_min = -pot.phi_max
    if h is None:
        h = 1e-3 * min(E - e_min, abs(E))
        h = max(h, 1e-9 * pot.phi_max)
    xp_, _ = from_action_angle(pot, estar, theta, E + h)
    xm_, _ = from_action_angle(pot, estar, theta, E - h)
    d = xp_ - xm_
    if E > 0 and abs(d) > 0.5:  # torus wrap
        d -= np.sign(d)
    return abs(d) / (2.0 * h)


# ---------------------------------------------------------------------------
# tabulated chart
# ---------------------------------------------------------------------------

class _SignedLogSpline:
    """Spline of a one-signed quantity spanning many orders of magnitude."""

    def __init__(self, y, vals):
        vals = np.asarray(vals, dtype=float)
        self.sign = 1.0 if vals[len(vals) // 2] > 0 else -1.0
        if np.all(self.sign * vals > 0):
            self._sp = CubicSpline(y, np.log(self.sign * vals))
            self._log = True
        else:
            self._sp = CubicSpline(y, vals)
            self._log = False

    def __call__(self, y):
        if self._log:
            return self.sign * np.exp(self._sp(y))
        return self._sp(y)


@dataclass
class ActionAngleChart:
    """Tabulated period data plus the source equilibrium.

    The grid clusters geometrically at the elliptic bottom and on both
    sides of the separatrix and stretches algebraically to e_max.  All
    arrays are immutable after construction; lazy caches (splines, orbit
    tables) are keyed dictionaries.
    """

    equilibrium: Equilibrium
    e_star: float
    e_trap: np.ndarray
    x_minus: np.ndarray
    x_plus: np.ndarray
    t_trap: np.ndarray
    tp_trap: np.ndarray
    tpp_trap: np.ndarray
    e_ext: np.ndarray
    t_ext: np.ndarray
    tp_ext: np.ndarray
    tpp_ext: np.ndarray
    rtol: float
    corner_n: int
    fixed_n: int | None = None
    _caches: dict = field(default_factory=dict, repr=False)

    # -- basic handles ------------------------------------------------
    @property
    def potential(self) -> PotentialProfile:
        return self.equilibrium.potential

    @property
    def e_min(self) -> float:
        return -self.potential.phi_max

    @property
    def e_max(self) -> float:
        return float(self.e_ext[-1])

    @property
    def t_min(self) -> float:
        """Harmonic period at the elliptic bottom, the infimum of T."""
        return 2.0 * np.pi / np.sqrt(-float(self.potential.d2phi(self.potential.x0)))

    def omega(self, region: str):
        return 1.0 / (self.t_trap if region == "trap" else self.t_ext)

    # -- direct quadrature evaluations ---------------------------------
    def period(self, E: float) -> float:
        return period(self.potential, self.e_star, E, rtol=self.rtol,
                      fixed_n=self.fixed_n, corner_n=self.corner_n)

    def period_deriv(self, E: float) -> float:
        return period_deriv(self.potential, self.e_star, E, rtol=self.rtol,
                            fixed_n=self.fixed_n, corner_n=self.corner_n)

    def period_deriv2(self, E: float) -> float:
        return period_deriv2(self.potential, self.e_star, E, rtol=self.rtol,
                             fixed_n=self.fixed_n, corner_n=self.corner_n)

    def turning_points(self, E: float):
        if E >= 0.0:
            return 0.0, 1.0
        return turning_points(self.potential, E)

    def angle(self, x: float, v: float) -> float:
        return angle(self.potential, self.e_star, x, v, rtol=self.rtol)

    def from_action_angle(self, theta: float, E: float, branch: int = 1):
        return from_action_angle(self.potential, self.e_star, theta, E, branch=branch)

    # -- interpolation ------------------------------------------------
    def _y_trap(self, E):
        E = np.asarray(E, dtype=float)
        return np.log((E - self.e_min) / (-E))

    def _splines(self):
        if "splines" not in self._caches:
            y1 = self._y_trap(self.e_trap)
            y2 = np.log(self.e_ext)
            self._caches["splines"] = {
                "T1": _SignedLogSpline(y1, self.t_trap),
                "T1p": _SignedLogSpline(y1, self.tp_trap),
                "T1pp": _SignedLogSpline(y1, self.tpp_trap),
                "T2": _SignedLogSpline(y2, self.t_ext),
                "T2p": _SignedLogSpline(y2, self.tp_ext),
                "T2pp": _SignedLogSpline(y2, self.tpp_ext),
            }
        return self._caches["splines"]

    def interp_T(self, E, region: str):
        sp = self._splines()
        if region == "trap":
            return sp["T1"](self._y_trap(E))
        return sp["T2"](np.log(np.asarray(E, dtype=float)))

    def interp_Tp(self, E, region: str):
        sp = self._splines()
        if region == "trap":
            return sp["T1p"](self._y_trap(E))
        return sp["T2p"](np.log(np.asarray(E, dtype=float)))

    def interp_Tpp(self, E, region: str):
        sp = self._splines()
        if region == "trap":
            return sp["T1pp"](self._y_trap(E))
        return sp["T2pp"](np.log(np.asarray(E, dtype=float)))

    def invert_period(self, target: float, region: str, polish: bool = True) -> float:
        """Solve T(E) = target on the requested monotone branch.

        polish=False stays on the tabulated splines (cheap, used inside
        sweeps); polish=True re-solves with the quadrature period so the
        residual is limited only by the quadrature tolerance.
        """
        if region == "trap":
            if target <= self.t_min:
                return self.e_min
            tv = self.t_trap
            if target <= tv[0]:
                # between the harmonic bottom and the first grid point
                lo, hi = self.e_min + 1e-3 * (self.e_trap[0] - self.e_min), self.e_trap[0]
            elif target >= tv[-1]:
                lo, hi = self.e_trap[-1], -10.0 * SINGULAR_GUARD * self.potential.phi_max
            else:
                j = int(np.searchsorted(tv, target))
                lo, hi = self.e_trap[j - 1], self.e_trap[j]
        else:
            tv = self.t_ext
            if target >= tv[0]:
                lo, hi = 10.0 * SINGULAR_GUARD * self.potential.phi_max, self.e_ext[0]
            elif target <= tv[-1]:
                # beyond the grid: 1/(2T^2) <= E <= 1/(2T^2) + |e_min| brackets E
                lo = 0.25 / target ** 2
                hi = 0.5 / target ** 2 - self.e_min + 1.0
            else:
                j = int(np.searchsorted(-tv, -target))
                lo, hi = self.e_ext[j - 1], self.e_ext[j]
        if polish:
            f = lambda E: self.period(E) - target
        else:
            f = lambda E: float(self.interp_T(E, region)) - target
        try:
            return float(brentq(f, lo, hi, xtol=1e-300, rtol=8.9e-16, maxiter=200))
        except ValueError as exc:
            raise ChartError(f"period inversion failed for target {target} "
                             f"in region {region}: {exc}") from None

    # -- fitted bound for the chart's energy derivative ----------------
    def dex_envelope(self, E):
        """chi-weighted shape e^(-1/2) (elliptic) + 1/|E| (hyperbolic and
        exterior) against which |dx/dE| is fitted."""
        E = np.asarray(E, dtype=float)
        env = np.zeros(E.shape)
        ell = (E > self.e_min) & (E < 0.5 * self.e_star)
        hyp = ((E > self.e_star) & (E < 0.0)) | ((E > 0.0) & (E < -self.e_star))
        ext = E > -0.5 * self.e_star
        env = np.where(ell, env + (E - self.e_min) ** -0.5, env)
        env = np.where(hyp | ext, env + 1.0 / np.abs(E), env)
        return env

    def fit_dex_constant(self, n_theta: int = 6, n_e: int = 24) -> float:
        if "dex_fit" not in self._caches:
            thetas = np.linspace(0.05, 0.45, n_theta)
            scale = self.potential.phi_max
            es = np.concatenate([
                self.e_min + np.geomspace(1e-6 * scale, 0.5 * scale, n_e // 3),
                -np.geomspace(1e-6 * scale, -self.e_star, n_e // 3),
                np.geomspace(1e-6 * scale, 10.0 * scale, n_e - 2 * (n_e // 3)),
            ])
            es = es[(es > self.e_min) & (np.abs(es) > 1e-8 * scale)]
            c = 0.0
            for E in es:
                env = float(self.dex_envelope(E))
                for th in thetas:
                    val = chart_energy_derivative(self.potential, self.e_star, th, float(E))
                    c = max(c, val / env)
            self._caches["dex_fit"] = c
        return self._caches["dex_fit"]

    def chart_energy_derivative(self, theta: float, E: float):
        """(value, fitted envelope bound) of |dx/dE| at (theta, E)."""
        val = chart_energy_derivative(self.potential, self.e_star, theta, E)
        bound = self.fit_dex_constant() * float(self.dex_envelope(E))
        return val, bound


def _region_grids(e_min, estar, n_per_region, e_max, offset):
    n_half = n_per_region // 2
    # trapped: cluster at the bottom and at the lower separatrix side
    lo = e_min + np.geomspace(offset, 0.5 * estar - e_min, n_half)
    hi = -np.geomspace(offset, -0.5 * estar, n_per_region - n_half)[::-1]
    e_trap = np.unique(np.concatenate([lo, hi]))
    # exterior: cluster at the upper separatrix side, stretch to e_max
    low = np.geomspace(offset, -0.5 * estar, n_half)
    u = np.linspace(0.0, 1.0, n_per_region - n_half + 1)[1:]
    high = -0.5 * estar + (e_max + 0.5 * estar) * u ** 2
    e_ext = np.unique(np.concatenate([low, high]))
    return e_trap, e_ext


def build_chart(eq: Equilibrium, n_per_region: int = 512,
                e_max_factor: float = 50.0, offset_factor: float = 1e-8,
                rtol: float = 1e-11, corner_n: int = 160,
                fixed_n: int | None = None) -> ActionAngleChart:
    """Tabulate turning points and T, T', T'' on the clustered energy grid."""
    estar = choose_estar(eq)
    e_min = eq.e_min
    scale = -e_min
    offset = offset_factor * scale
    e_trap, e_ext = _region_grids(e_min, estar, n_per_region,
                                  e_max_factor * scale, offset)
    pot = eq.potential

    xm = np.empty_like(e_trap)
    xp = np.empty_like(e_trap)
    t1 = np.empty_like(e_trap)
    t1p = np.empty_like(e_trap)
    t1pp = np.empty_like(e_trap)
    for i, E in enumerate(e_trap):
        xm[i], xp[i] = turning_points(pot, float(E))
        t1[i] = period(pot, estar, float(E), rtol, fixed_n, corner_n)
        t1p[i] = period_deriv(pot, estar, float(E), rtol, fixed_n, corner_n)
        t1pp[i] = period_deriv2(pot, estar, float(E), rtol, fixed_n, corner_n)

    t2 = np.empty_like(e_ext)
    t2p = np.empty_like(e_ext)
    t2pp = np.empty_like(e_ext)
    for i, E in enumerate(e_ext):
        t2[i] = period(pot, estar, float(E), rtol, fixed_n, corner_n)
        t2p[i] = period_deriv(pot, estar, float(E), rtol, fixed_n, corner_n)
        t2pp[i] = period_deriv2(pot, estar, float(E), rtol, fixed_n, corner_n)

    return ActionAngleChart(
        equilibrium=eq, e_star=estar,
        e_trap=e_trap, x_minus=xm, x_plus=xp,
        t_trap=t1, tp_trap=t1p, tpp_trap=t1pp,
        e_ext=e_ext, t_ext=t2, tp_ext=t2p, tpp_ext=t2pp,
        rtol=rtol, corner_n=corner_n, fixed_n=fixed_n,
    )
