"""Quadrature kernels for orbit integrals with square-root turning points.

Every integral in this package has the shape

    J = int W(x) * (2*(E + phi(x)))**(-p) dx

where ``phi`` is a single-well periodic potential with a quadratic minimum
at the endpoints x = 0, 1 and a quadratic maximum inside.  The factor
``E + phi`` vanishes linearly at turning points and quadratically at the
corners, so naive quadrature loses all accuracy near the separatrix.
Three substitutions cover every regime:

* a cosine stretch ``x = x_lo + (x_hi - x_lo)*(1 - cos(pi*u))/2`` that
  absorbs simple inverse-square-root endpoints,
* a corner stretch ``z = sqrt(phi(x))`` followed by ``z = sqrt(|E|)*cosh(tau)``
  (energies below the separatrix) or ``z = sqrt(E)*sinh(tau)`` (above),
  which turns the logarithmic pile-up at the corner into an analytic
  integrand with O(1) scales in tau,
* plain Gauss-Legendre away from all singular points.

The corner stretch keeps *relative* accuracy uniformly down to
|E| ~ 1e-14, which is what the near-separatrix asymptotics checks need.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def gauss_legendre(n: int):
    """Nodes and weights on (0, 1)."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def fixed_gl(f, a: float, b: float, n: int) -> float:
    """Gauss-Legendre with exactly n nodes on [a, b]."""
    if b <= a:
        return 0.0
    u, w = gauss_legendre(n)
    x = a + (b - a) * u
    return (b - a) * float(np.dot(w, f(x)))


def adaptive_gl(f, a: float, b: float, rtol: float = 1e-11,
                n0: int = 64, n_max: int = 8192) -> float:
    """Node-doubling Gauss-Legendre on [a, b].

    Doubles the node count until two consecutive values agree to rtol
    (relative, with an absolute floor) or n_max is reached.
    """
    if b <= a:
        return 0.0
    n = n0
    prev = fixed_gl(f, a, b, n)
    last_diff = np.inf
    while n < n_max:
        n *= 2
        cur = fixed_gl(f, a, b, n)
        diff = abs(cur - prev)
        if diff <= rtol * max(abs(cur), 1e-300) + 1e-300:
            return cur
        # rounding-noise plateau: refinement stopped helping at a level far
        # below any real convergence failure
        if diff >= 0.5 * last_diff and diff <= 1e-8 * abs(cur):
            return cur
        last_diff = diff
        prev = cur
    return prev


def invert_increasing(fn, lo: float, hi: float, targets, n_bisect: int = 80):
    """Solve fn(x) = t for each target on a strictly increasing branch.

    Plain vectorized bisection; 80 halvings put the bracket width at the
    rounding floor for any [lo, hi] inside [0, 1].
    """
    t = np.atleast_1d(np.asarray(targets, dtype=float))
    a = np.full_like(t, lo)
    b = np.full_like(t, hi)
    for _ in range(n_bisect):
        m = 0.5 * (a + b)
        below = fn(m) < t
        a = np.where(below, m, a)
        b = np.where(below, b, m)
    out = 0.5 * (a + b)
    return out if np.ndim(targets) else float(out[0])


def invert_decreasing(fn, lo: float, hi: float, targets, n_bisect: int = 80):
    """Same as invert_increasing for a strictly decreasing branch."""
    t = np.atleast_1d(np.asarray(targets, dtype=float))
    a = np.full_like(t, lo)
    b = np.full_like(t, hi)
    for _ in range(n_bisect):
        m = 0.5 * (a + b)
        above = fn(m) > t
        a = np.where(above, m, a)
        b = np.where(above, b, m)
    out = 0.5 * (a + b)
    return out if np.ndim(targets) else float(out[0])


def cos_stretch_integral(pot, E: float, x_lo: float, x_hi: float,
                         weight=None, rtol: float = 1e-11,
                         n0: int = 64, n_max: int = 8192,
                         fixed_n: int | None = None,
                         t_bounds: tuple | None = None) -> float:
    """int_{x_lo}^{x_hi} W(x) / sqrt(2*(E + phi(x))) dx.

    The substitution flattens inverse-square-root singularities at either
    endpoint, so it is exact to Gauss-Legendre accuracy when the endpoints
    are turning points of order one.

    When the potential carries a well_depth closure and t_bounds gives the
    endpoints as offsets from the top, everything is evaluated in offset
    coordinates: near the bottom of the well the orbit shrinks far below
    the rounding unit of x itself, and only the offset form keeps the
    kinetic factor consistent with the turning points.
    """
    eps_f = np.finfo(float).eps
    depth = getattr(pot, "well_depth", None)
    if E < 0.0 and depth is not None and t_bounds is not None:
        t_lo, t_hi = t_bounds
        if t_hi <= t_lo:
            return 0.0
        half = 0.5 * (t_hi - t_lo)
        ee = E + pot.phi_max  # consistent with the turning-point solve
        floor = 8.0 * eps_f * ee

        def integrand(u):
            t = t_lo + half * (1.0 - np.cos(np.pi * u))
            s = np.sqrt(np.maximum(2.0 * (ee - depth(t)), floor))
            val = half * np.pi * np.sin(np.pi * u) / s
            if weight is not None:
                val = val * weight(pot.x0 + t)
            return val
    else:
        if x_hi <= x_lo:
            return 0.0
        half = 0.5 * (x_hi - x_lo)
        # E + phi is formed by cancellation; clamp at the rounding scale of
        # the terms involved so stray nodes near the turning points stay
        # bounded
        floor = 8.0 * eps_f * (abs(E) + pot.phi_max)

        def integrand(u):
            x = x_lo + half * (1.0 - np.cos(np.pi * u))
            s = np.sqrt(np.maximum(2.0 * (E + pot.phi(x)), floor))
            val = half * np.pi * np.sin(np.pi * u) / s
            if weight is not None:
                val = val * weight(x)
            return val

    if fixed_n is not None:
        return fixed_gl(integrand, 0.0, 1.0, fixed_n)
    return adaptive_gl(integrand, 0.0, 1.0, rtol=rtol, n0=n0, n_max=n_max)


def corner_integral(pot, E: float, side: str, x_far, p: float = 0.5,
                    weight=None, n: int = 160) -> float:
    """Corner-adjacent piece of int W(x)*(2*(E+phi(x)))**(-p) dx.

    side='left'  : piece between the corner x=0 (or the left turning point
                   if E<0) and x_far, with phi increasing;
    side='right' : mirrored piece between x_far and the corner x=1 (or the
                   right turning point if E<0), phi decreasing.

    For E < 0 only p = 1/2 is supported (that is the only kernel the
    trapped-side formulas need); for E > 0 any p works.  Relative accuracy
    is uniform in E because the integrand is analytic with O(1) scales in
    the stretched variable.
    """
    if E < 0.0 and p != 0.5:
        raise ValueError("corner_integral below the separatrix supports p = 1/2 only")
    phi_far = float(pot.phi(x_far))
    if E < 0.0 and phi_far <= -E * (1.0 + 1e-14):
        return 0.0
    z_far = np.sqrt(max(phi_far, 0.0))
    if z_far <= 0.0:
        return 0.0

    if side == "left":
        x_bracket = (0.0, float(x_far))
        invert = invert_increasing
    elif side == "right":
        x_bracket = (float(x_far), 1.0)
        invert = invert_decreasing
    else:
        raise ValueError(f"unknown side {side!r}")

    u, w = gauss_legendre(n)

    if E < 0.0:
        z0 = np.sqrt(-E)
        tau_hi = float(np.arccosh(z_far / z0))
        if tau_hi <= 0.0:
            return 0.0
        tau = tau_hi * u
        z = z0 * np.cosh(tau)
        x = invert(pot.phi, x_bracket[0], x_bracket[1], z * z)
        vals = np.sqrt(2.0) * z / np.abs(pot.dphi(x))
        if weight is not None:
            vals = vals * weight(x)
        return tau_hi * float(np.dot(w, vals))

    # E > 0: z runs from 0 at the corner.
    z0 = np.sqrt(E)
    tau_hi = float(np.arcsinh(z_far / z0))
    tau = tau_hi * u
    z = z0 * np.sinh(tau)
    ch = np.cosh(tau)
    x = invert(pot.phi, x_bracket[0], x_bracket[1], z * z)
    vals = 2.0 ** (1.0 - p) * E ** (0.5 - p) * z * ch ** (1.0 - 2.0 * p) / np.abs(pot.dphi(x))
    if weight is not None:
        vals = vals * weight(x)
    return tau_hi * float(np.dot(w, vals))


def mid_integral(pot, E: float, a: float, b: float, p: float = 0.5,
                 weight=None, rtol: float = 1e-11, n0: int = 64,
                 n_max: int = 4096, fixed_n: int | None = None) -> float:
    """int_a^b W(x)*(2*(E+phi(x)))**(-p) dx away from singular points."""
    if b <= a:
        return 0.0

    def integrand(x):
        val = (2.0 * (E + pot.phi(x))) ** (-p)
        if weight is not None:
            val = val * weight(x)
        return val

    if fixed_n is not None:
        return fixed_gl(integrand, a, b, fixed_n)
    return adaptive_gl(integrand, a, b, rtol=rtol, n0=n0, n_max=n_max)
