"""Steady electrostatic potentials on the unit torus.

The potential vanishes at the endpoints, has a single interior maximum
x0, is convex near the corners and concave near the top.  Those
structural facts (not any particular closed form) are what the orbit and
period machinery relies on, so construction validates them by sampling
and root isolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "PotentialProfile",
    "PotentialValidationError",
    "make_potential_family",
    "potential_from_callables",
    "check_potential",
]


class PotentialValidationError(ValueError):
    """A requested potential violates one of the structural assumptions."""

    def __init__(self, failures):
        self.failures = failures
        names = ", ".join(f["name"] for f in failures)
        super().__init__(f"potential fails structural assumptions: {names}")


@dataclass(frozen=True)
class PotentialProfile:
    name: str
    phi: Callable[[np.ndarray], np.ndarray]
    dphi: Callable[[np.ndarray], np.ndarray]
    d2phi: Callable[[np.ndarray], np.ndarray]
    d3phi: Callable[[np.ndarray], np.ndarray]
    x0: float
    phi_max: float
    params: dict = field(default_factory=dict)
    # optional exact evaluator of phi(x0) - phi(x0 + t); avoids the
    # cancellation that otherwise caps accuracy near the orbit bottom
    well_depth: Callable[[np.ndarray], np.ndarray] | None = None

    @property
    def e_min(self) -> float:
        """Bottom of the trapped energy range, -phi(x0)."""
        return -self.phi_max


def _locate_maximum(phi, dphi) -> float:
    """Unique interior zero of phi' with a sign change from + to -."""
    xs = np.linspace(1e-6, 1.0 - 1e-6, 4097)
    d = dphi(xs)
    flips = np.nonzero((d[:-1] > 0) & (d[1:] <= 0))[0]
    if len(flips) == 0:
        raise PotentialValidationError([{
            "name": "phi1_unique_maximum",
            "witness": None,
            "detail": "no interior maximum found",
        }])
    i = flips[0]
    return float(brentq(dphi, xs[i], xs[i + 1], xtol=1e-15))


def make_potential_family(shape: str, amplitude: float, params: dict | None = None,
                          validate: bool = True) -> PotentialProfile:
    """Construct a named potential family.

    Shapes:
      * "sin2"        : amplitude * sin(pi x)^2
      * "tilted_sin2" : amplitude * exp(tilt*(x - 1/2)) * sin(pi x)^2,
                        an asymmetric perturbation with distinct corner
                        curvatures (params: {"tilt": b})
    """
    if amplitude <= 0:
        raise ValueError("amplitude must be positive")
    a = float(amplitude)
    params = dict(params or {})

    if shape == "sin2":
        pi = np.pi

        def phi(x):
            return a * np.sin(pi * x) ** 2

        def dphi(x):
            return a * pi * np.sin(2.0 * pi * x)

        def d2phi(x):
            return 2.0 * a * pi ** 2 * np.cos(2.0 * pi * x)

        def d3phi(x):
            return -4.0 * a * pi ** 3 * np.sin(2.0 * pi * x)

        def depth(t):
            # phi(1/2) - phi(1/2 + t) = a sin(pi t)^2, exact for small t
            return a * np.sin(pi * t) ** 2

        pot = PotentialProfile("sin2", phi, dphi, d2phi, d3phi,
                               x0=0.5, phi_max=a, params={"amplitude": a},
                               well_depth=depth)
    elif shape == "tilted_sin2":
        b = float(params.get("tilt", 0.3))
        pi = np.pi

        def phi(x):
            return a * np.exp(b * (x - 0.5)) * np.sin(pi * x) ** 2

        def dphi(x):
            s2 = np.sin(pi * x) ** 2
            return a * np.exp(b * (x - 0.5)) * (b * s2 + pi * np.sin(2.0 * pi * x))

        def d2phi(x):
            s2 = np.sin(pi * x) ** 2
            return a * np.exp(b * (x - 0.5)) * (
                b * b * s2 + 2.0 * b * pi * np.sin(2.0 * pi * x)
                + 2.0 * pi ** 2 * np.cos(2.0 * pi * x))

        def d3phi(x):
            s2 = np.sin(pi * x) ** 2
            return a * np.exp(b * (x - 0.5)) * (
                b ** 3 * s2 + 3.0 * b * b * pi * np.sin(2.0 * pi * x)
                + 6.0 * b * pi ** 2 * np.cos(2.0 * pi * x)
                - 4.0 * pi ** 3 * np.sin(2.0 * pi * x))

        x0 = _locate_maximum(phi, dphi)
        pot = PotentialProfile("tilted_sin2", phi, dphi, d2phi, d3phi,
                               x0=x0, phi_max=float(phi(x0)),
                               params={"amplitude": a, "tilt": b})
    else:
        raise ValueError(f"unknown potential family {shape!r}")

    if validate:
        _validate_or_raise(pot)
    return pot


def potential_from_callables(name, phi, dphi, d2phi, d3phi,
                             validate: bool = True, params: dict | None = None
                             ) -> PotentialProfile:
    """Wrap user-supplied closures; the maximizer is located numerically."""
    x0 = _locate_maximum(phi, dphi)
    pot = PotentialProfile(name, phi, dphi, d2phi, d3phi,
                           x0=x0, phi_max=float(phi(x0)), params=dict(params or {}))
    if validate:
        _validate_or_raise(pot)
    return pot


def direct_period_monotonicity(pot: PotentialProfile, n_samples: int = 10) -> bool:
    """Sample T'(E) over the trapped range.

    The pointwise criterion checked by check_potential is sufficient but
    not necessary: any potential with a nonzero third derivative at the
    top violates it in a one-sided neighbourhood of x0 while the period
    may still be strictly monotone.  This is the direct fallback.
    """
    from .action_angle import choose_estar, period_deriv  # cycle-safe at call time

    estar = choose_estar(pot)
    e_min = -pot.phi_max
    fracs = np.concatenate([[1e-5, 1e-3], np.linspace(0.05, 0.95, n_samples - 4),
                            [0.999, 0.99999]])
    return all(period_deriv(pot, estar, float(e_min * (1.0 - f))) > 0.0
               for f in fracs)


def _validate_or_raise(pot: PotentialProfile) -> None:
    failures = [f for f in check_potential(pot) if not f["passed"]]
    if failures and all(f["name"] == "phi4s_period_criterion" for f in failures):
        if direct_period_monotonicity(pot):
            return
    if failures:
        raise PotentialValidationError(failures)


def check_potential(pot: PotentialProfile, n_x: int = 2048, h: float = -np.inf) -> list:
    """Sampled structural checks; returns a list of report entries.

    h is the left endpoint of the profile domain: the trapped energy range
    must satisfy -phi(x0) > h.
    """
    checks = []
    xs = np.linspace(0.0, 1.0, n_x + 1)
    interior = xs[1:-1]
    phi_v = pot.phi(interior)

    # endpoint values, positivity, unique interior maximum, domain fit
    ends_ok = abs(float(pot.phi(0.0))) < 1e-12 and abs(float(pot.phi(1.0))) < 1e-12
    d = pot.dphi(interior)
    sign_flips = int(np.count_nonzero(np.diff(np.sign(d)) != 0))
    max_ok = pot.phi_max > 0 and 0.0 < pot.x0 < 1.0 and sign_flips == 1
    witness = None
    if sign_flips != 1:
        flip_idx = np.nonzero(np.diff(np.sign(d)) != 0)[0]
        if len(flip_idx) > 1:
            witness = float(interior[flip_idx[1]])
    checks.append({
        "name": "phi1_unique_maximum",
        "passed": bool(ends_ok and max_ok and np.all(phi_v >= 0.0) and -pot.phi_max > h),
        "witness": witness,
        "detail": "phi(0)=phi(1)=0, phi>0, one interior maximum, -phi(x0)>h",
    })

    # strict monotonicity on both sides, convexity near the corners,
    # concavity near the top
    left = interior[interior < pot.x0]
    right = interior[interior > pot.x0]
    mono_ok = bool(np.all(pot.dphi(left) > 0) and np.all(pot.dphi(right) < 0))
    near0 = np.linspace(1e-6, 0.02, 64)
    curv_ok = bool(np.all(pot.d2phi(near0) > 0) and np.all(pot.d2phi(1.0 - near0) > 0)
                   and np.all(pot.d2phi(pot.x0 + np.linspace(-0.02, 0.02, 64)) < 0))
    wit = None
    if not mono_ok:
        bad = left[pot.dphi(left) <= 0]
        wit = float(bad[0]) if len(bad) else float(right[pot.dphi(right) >= 0][0])
    checks.append({
        "name": "phi2_monotone_convexity",
        "passed": mono_ok and curv_ok,
        "witness": wit,
        "detail": "phi increasing/decreasing about x0; convex near 0,1; concave near x0",
    })

    # monotone-period surrogate: phi'^2 + 2(phi(x0)-phi) phi'' > 0 away from x0
    away = interior[np.abs(interior - pot.x0) > 1e-4]
    crit = pot.dphi(away) ** 2 + 2.0 * (pot.phi_max - pot.phi(away)) * pot.d2phi(away)
    crit_ok = bool(np.all(crit > 0))
    checks.append({
        "name": "phi4s_period_criterion",
        "passed": crit_ok,
        "witness": None if crit_ok else float(away[int(np.argmin(crit))]),
        "detail": "phi'^2 + 2(phi(x0)-phi) phi'' positive on (0,1) minus the top",
    })

    # consistency of supplied derivatives (centred differences)
    hstep = 1e-6
    xs_fd = np.linspace(0.05, 0.95, 256)
    fd1 = (pot.phi(xs_fd + hstep) - pot.phi(xs_fd - hstep)) / (2 * hstep)
    fd2 = (pot.dphi(xs_fd + hstep) - pot.dphi(xs_fd - hstep)) / (2 * hstep)
    fd3 = (pot.d2phi(xs_fd + hstep) - pot.d2phi(xs_fd - hstep)) / (2 * hstep)
    scale = max(pot.phi_max, 1.0)
    cons = max(float(np.max(np.abs(fd1 - pot.dphi(xs_fd)))) / scale,
               float(np.max(np.abs(fd2 - pot.d2phi(xs_fd)))) / scale,
               float(np.max(np.abs(fd3 - pot.d3phi(xs_fd)))) / scale)
    checks.append({
        "name": "phi_derivative_consistency",
        "passed": cons < 1e-3,
        "constant": cons,
        "detail": "supplied derivatives vs centred differences",
    })
    return checks
