"""Microscopic equations of state for BGK equilibria.

A profile mu maps particle energy e to phase-space density, mu > 0 on a
domain (h, inf) with h in [-inf, 0).  The steady state is
f0(x, v) = mu(eps^2 * E(x, v)).  Profiles may be merely Hoelder-1/2 at the
separatrix energy e = 0 (electron-hole states), so the two sides
mu_minus (e <= 0) and mu_plus (e > 0) carry separate evaluators; the
multi-branched variant additionally distinguishes the sign of v above the
separatrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad

__all__ = [
    "MicroProfile",
    "boltzmannian",
    "polytrope",
    "even_nonmonotone",
    "schamel",
    "check_profile",
    "tail_integral",
]

ArrayFn = Callable[[np.ndarray], np.ndarray]

# liminf of |mu'(e)|*sqrt(e) as e -> 0+ above this marks the profile as
# merely Hoelder-1/2 at the separatrix
IRREGULARITY_THRESHOLD = 1e-3


@dataclass(frozen=True)
class MicroProfile:
    """Piecewise evaluators for mu and its first two derivatives.

    kind is "single" (mu_plus shared by both signs of v) or "multi"
    (separate upper/lower branches above the separatrix, selected by the
    sign of v).  monotonicity is the structural class the spectral
    machinery relies on: "decreasing", "increasing-decreasing", or
    "per-branch".
    """

    name: str
    h: float
    kind: str
    monotonicity: str
    mu_minus: ArrayFn
    dmu_minus: ArrayFn
    d2mu_minus: ArrayFn
    mu_plus: ArrayFn
    dmu_plus: ArrayFn
    d2mu_plus: ArrayFn
    mu_plus_down: ArrayFn | None = None
    dmu_plus_down: ArrayFn | None = None
    d2mu_plus_down: ArrayFn | None = None
    params: dict = field(default_factory=dict)

    def mu(self, e, v_sign: int = 1):
        """mu(e); v_sign matters above the separatrix for multi profiles only."""
        return self._eval(e, v_sign, 0)

    def mu_prime(self, e, v_sign: int = 1):
        return self._eval(e, v_sign, 1)

    def mu_second(self, e, v_sign: int = 1):
        return self._eval(e, v_sign, 2)

    def _eval(self, e, v_sign, order):
        e_arr = np.atleast_1d(np.asarray(e, dtype=float))
        minus = (self.mu_minus, self.dmu_minus, self.d2mu_minus)[order]
        if self.kind == "multi" and v_sign < 0:
            plus = (self.mu_plus_down, self.dmu_plus_down, self.d2mu_plus_down)[order]
        else:
            plus = (self.mu_plus, self.dmu_plus, self.d2mu_plus)[order]
        out = np.empty(e_arr.shape, dtype=float)
        neg = e_arr <= 0.0
        if np.any(neg):
            out[neg] = minus(e_arr[neg])
        if np.any(~neg):
            out[~neg] = plus(e_arr[~neg])
        return out if np.ndim(e) else float(out[0])

    @property
    def is_monotone(self) -> bool:
        return self.monotonicity == "decreasing"


def boltzmannian(beta: float) -> MicroProfile:
    """mu(e) = exp(-beta*e) on the whole line; strictly decreasing."""
    if beta <= 0:
        raise ValueError("inverse temperature beta must be positive")
    b = float(beta)
    return MicroProfile(
        name="boltzmannian",
        h=-np.inf,
        kind="single",
        monotonicity="decreasing",
        mu_minus=lambda e: np.exp(-b * e),
        dmu_minus=lambda e: -b * np.exp(-b * e),
        d2mu_minus=lambda e: b * b * np.exp(-b * e),
        mu_plus=lambda e: np.exp(-b * e),
        dmu_plus=lambda e: -b * np.exp(-b * e),
        d2mu_plus=lambda e: b * b * np.exp(-b * e),
        params={"beta": b},
    )


def polytrope(k: int, h: float) -> MicroProfile:
    """mu(e) = (e^(2k+1) - h^(2k+1))^(-1) on (h, inf); strictly decreasing."""
    if k < 0 or int(k) != k:
        raise ValueError("polytrope index k must be a nonnegative integer")
    if h >= 0:
        raise ValueError("polytrope cutoff h must be negative")
    k = int(k)
    h = float(h)
    m = 2 * k + 1
    hm = h ** m

    def val(e):
        return 1.0 / (e ** m - hm)

    def dval(e):
        return -m * e ** (m - 1) / (e ** m - hm) ** 2

    def d2val(e):
        den = e ** m - hm
        return (-m * (m - 1) * e ** (m - 2) * den + 2.0 * m * m * e ** (2 * m - 2)) / den ** 3

    return MicroProfile(
        name="polytrope",
        h=h,
        kind="single",
        monotonicity="decreasing",
        mu_minus=val, dmu_minus=dval, d2mu_minus=d2val,
        mu_plus=val, dmu_plus=dval, d2mu_plus=d2val,
        params={"k": k, "h": h},
    )


def even_nonmonotone(k: int) -> MicroProfile:
    """mu(e) = 1/(1 + e^(2k)); even, with its maximum at the separatrix."""
    if k < 1 or int(k) != k:
        raise ValueError("index k must be a positive integer")
    k = int(k)
    m = 2 * k

    def val(e):
        return 1.0 / (1.0 + e ** m)

    def dval(e):
        return -m * e ** (m - 1) / (1.0 + e ** m) ** 2

    def d2val(e):
        den = 1.0 + e ** m
        return (-m * (m - 1) * e ** (m - 2) * den + 2.0 * m * m * e ** (2 * m - 2)) / den ** 3

    return MicroProfile(
        name="even_nonmonotone",
        h=-np.inf,
        kind="single",
        monotonicity="increasing-decreasing",
        mu_minus=val, dmu_minus=dval, d2mu_minus=d2val,
        mu_plus=val, dmu_plus=dval, d2mu_plus=d2val,
        params={"k": k},
    )


def schamel(alpha: float, beta: float, multibranch: bool = False) -> MicroProfile:
    """Electron-hole profile: exp(beta*e - alpha^2) below the separatrix and
    exp(-(sqrt(e) + alpha)^2) above it.

    For alpha > 0 the profile is only Hoelder-1/2 at e = 0.  The
    multibranch variant keeps both signs exp(-(+-sqrt(e) + alpha)^2),
    selected by the sign of v.
    """
    if alpha < 0:
        raise ValueError("lab-frame velocity alpha must be nonnegative")
    if beta <= 0:
        raise ValueError("beta must be positive")
    a = float(alpha)
    b = float(beta)

    def mu_m(e):
        return np.exp(b * e - a * a)

    def dmu_m(e):
        return b * np.exp(b * e - a * a)

    def d2mu_m(e):
        return b * b * np.exp(b * e - a * a)

    def branch(sign):
        # with u = sign*sqrt(e) + alpha:
        #   mu   = exp(-u^2)
        #   mu'  = -sign*u/sqrt(e) * mu
        #   mu'' = (u^2/e + sign*alpha/(2 e^(3/2))) * mu
        def val(e):
            return np.exp(-(sign * np.sqrt(e) + a) ** 2)

        def dval(e):
            r = np.sqrt(e)
            return -val(e) * sign * (sign * r + a) / r

        def d2val(e):
            r = np.sqrt(e)
            u = sign * r + a
            return val(e) * (u * u / e + sign * a / (2.0 * e * r))

        return val, dval, d2val

    up = branch(+1.0)
    down = branch(-1.0)

    if multibranch:
        return MicroProfile(
            name="schamel_multibranch",
            h=-np.inf,
            kind="multi",
            monotonicity="per-branch",
            mu_minus=mu_m, dmu_minus=dmu_m, d2mu_minus=d2mu_m,
            mu_plus=up[0], dmu_plus=up[1], d2mu_plus=up[2],
            mu_plus_down=down[0], dmu_plus_down=down[1], d2mu_plus_down=down[2],
            params={"alpha": a, "beta": b},
        )
    return MicroProfile(
        name="schamel",
        h=-np.inf,
        kind="single",
        monotonicity="increasing-decreasing",
        mu_minus=mu_m, dmu_minus=dmu_m, d2mu_minus=d2mu_m,
        mu_plus=up[0], dmu_plus=up[1], d2mu_plus=up[2],
        params={"alpha": a, "beta": b},
    )


# ---------------------------------------------------------------------------
# structural checks on mu
# ---------------------------------------------------------------------------


def tail_integral(profile: MicroProfile, v_sign: int = 1) -> float:
    """int_0^inf |mu'(e)| sqrt(e) de over dyadic blocks.

    Blocks of algebraically decaying tails shrink geometrically, so once
    the cutoff is large the remainder is summed by geometric
    extrapolation; a block ratio near one signals divergence.
    """
    def f(e):
        return abs(profile.mu_prime(e, v_sign)) * np.sqrt(e)

    total, _ = quad(f, 0.0, 1.0, limit=200)
    hi = 1.0
    prev_piece = None
    while True:
        piece, _ = quad(f, hi, 2.0 * hi, limit=200)
        total += piece
        hi *= 2.0
        if piece < 1e-13 * max(total, 1e-300):
            return total
        if hi > 1e8:
            ratio = piece / prev_piece if prev_piece else 1.0
            if ratio > 0.95:
                raise ValueError("tail of |mu'(e)| sqrt(e) does not converge")
            return total + piece * ratio / (1.0 - ratio)
        prev_piece = piece


def check_profile(profile: MicroProfile, n_e: int = 4096) -> dict:
    """Sampled verification of the structural assumptions on mu.

    Returns a dict of named entries {passed, constant, witness, ...}.
    Failures never raise; they become report entries.
    """
    entries: dict = {}
    signs = (1, -1) if profile.kind == "multi" else (1,)

    # continuity and the Hoelder-1/2 constant across the separatrix; the
    # one-sided limit is extrapolated linearly in sqrt(e) so a legitimate
    # Hoelder slope is not mistaken for a jump
    mu_left = float(profile.mu(-1e-300))
    e_small = np.geomspace(1e-12, 1.0, n_e)
    holder = 0.0
    jump = 0.0
    for s in signs:
        v1 = float(profile.mu(1e-16, s))
        v2 = float(profile.mu(4e-16, s))
        lim = 2.0 * v1 - v2
        jump = max(jump, abs(lim - mu_left))
        holder = max(holder, float(np.max(
            np.abs(profile.mu(e_small, s) - lim) / np.sqrt(e_small))))
    entries["mu1_continuity"] = {
        "passed": jump < 1e-8 * max(1.0, mu_left),
        "constant": jump,
    }
    entries["mu1_holder"] = {
        "passed": bool(np.isfinite(holder)),
        "constant": holder,
        "detail": "sup over (0,1] of |mu(e)-mu(0+)|/sqrt(e)",
    }

    # sampled smoothness per branch: supplied derivatives vs difference
    # quotients (guards against inconsistent user-supplied closures)
    def fd_error(val_fn, d_fn, grid):
        h = 1e-6 * np.maximum(np.abs(grid), 1.0)
        num = (val_fn(grid + h) - val_fn(grid - h)) / (2.0 * h)
        ref = d_fn(grid)
        scale = np.maximum(np.abs(ref), 1e-3 * np.max(np.abs(ref)) + 1e-12)
        return float(np.max(np.abs(num - ref) / scale))

    lo = profile.h / 2.0 if np.isfinite(profile.h) else -10.0
    grid_m = np.linspace(lo, -1e-3, 512)
    errs = [fd_error(profile.mu_minus, profile.dmu_minus, grid_m)]
    grid_p = np.geomspace(1e-3, 50.0, 512)
    for s in signs:
        errs.append(fd_error(lambda e: profile.mu(e, s),
                             lambda e: profile.mu_prime(e, s), grid_p))
    entries["mu1_smoothness"] = {
        "passed": max(errs) < 1e-4,
        "constant": max(errs),
        "detail": "derivative evaluators vs centred differences per branch",
    }

    # blow-up bounds at small positive energies
    e_blow = np.geomspace(1e-10, 1.0, n_e)
    c1 = max(float(np.max(np.abs(profile.mu_prime(e_blow, s)) * np.sqrt(e_blow)))
             for s in signs)
    c2 = max(float(np.max(np.abs(profile.mu_second(e_blow, s)) * e_blow ** 1.5))
             for s in signs)
    entries["mu2_blowup"] = {
        "passed": bool(np.isfinite(c1) and np.isfinite(c2)),
        "constant": max(c1, c2),
        "detail": "sup |mu'| e^(1/2) and sup |mu''| e^(3/2) on (0,1)",
    }

    # tail bounds and the compactness integral
    e_tail = np.geomspace(1.0, 1e8, n_e)
    ct1 = max(float(np.max(np.abs(profile.mu_prime(e_tail, s)) * (1.0 + e_tail)))
              for s in signs)
    ct2 = max(float(np.max(np.abs(profile.mu_second(e_tail, s)) * (1.0 + e_tail ** 2)))
              for s in signs)
    try:
        tails = [tail_integral(profile, s) for s in signs]
        tail_ok = True
        tail_val = max(tails)
    except ValueError:
        tail_ok = False
        tail_val = np.inf
    entries["mu3_tail"] = {
        "passed": bool(np.isfinite(ct1) and np.isfinite(ct2) and tail_ok),
        "constant": max(ct1, ct2),
        "tail_integral": tail_val,
        "detail": "sup |mu'|(1+e), sup |mu''|(1+e^2) for e>=1; int |mu'| sqrt(e) de",
    }

    # monotonicity class; samples where mu itself has underflowed carry no
    # sign information and are excluded from the strict scans
    dm = profile.mu_prime(grid_m)
    minus_dec = bool(np.all(dm < 0))
    minus_inc = bool(np.all(dm > 0))
    e_pos = np.geomspace(1e-8, 1e4, 2048)
    mono: dict = {"witness": None}
    if profile.kind == "multi":
        ok = minus_dec or minus_inc
        for s in signs:
            alive = profile.mu(e_pos, s) > 1e-290
            ee = e_pos[alive]
            dp = profile.mu_prime(ee, s)
            flips = int(np.count_nonzero(np.diff(np.sign(dp)) != 0))
            branch_ok = (flips == 0 and bool(np.all(dp < 0))) or \
                        (flips == 1 and dp[0] > 0 and dp[-1] < 0)
            if not branch_ok and mono["witness"] is None:
                mono["witness"] = float(ee[int(np.argmax(dp >= 0))])
            ok = ok and branch_ok
        mono.update({"passed": bool(ok), "class": "per-branch"})
    else:
        alive = profile.mu(e_pos) > 1e-290
        ee = e_pos[alive]
        dp = profile.mu_prime(ee)
        plus_dec = bool(np.all(dp < 0))
        if not plus_dec:
            mono["witness"] = float(ee[int(np.argmax(dp >= 0))])
        mono.update({
            "passed": plus_dec and (minus_dec or minus_inc),
            "class": "decreasing" if (minus_dec and plus_dec) else "increasing-decreasing",
        })
    entries["mu4_monotonicity"] = mono

    # regularity classification from the small-e plateau of |mu'| sqrt(e)
    e_cls = np.geomspace(1e-12, 1e-6, 256)
    plateau = min(float(np.min(np.abs(profile.mu_prime(e_cls, s)) * np.sqrt(e_cls)))
                  for s in signs)
    entries["regularity"] = {
        "passed": True,
        "class": "irregular" if plateau > IRREGULARITY_THRESHOLD else "regular",
        "constant": plateau,
        "detail": "liminf of |mu'(e)| sqrt(e) as e -> 0+",
    }
    return entries
