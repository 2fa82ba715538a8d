"""Steady states of the rescaled Vlasov-Poisson system on the unit torus.

The electron density is f0(x,v) = mu(eps^2 * E(x,v)) with
E = v^2/2 - phi(x), and the ion background is *defined* by the Poisson
equation,

    rho_+(x) = -phi''(x) + eps * int mu(eps^2 (v^2/2 - phi(x))) dv,

so self-consistency is automatic and the substantive checks are the
structural assumptions on mu and phi, positivity of rho_+, and agreement
of independent quadrature routes for the velocity integral.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .potentials import PotentialProfile, check_potential
from .profiles import MicroProfile, check_profile
from .quadrature import gauss_legendre

__all__ = [
    "Equilibrium",
    "make_equilibrium",
    "ion_density",
    "poisson_residual",
    "verify_assumptions",
    "forced_homogeneous_defect",
]


@dataclass
class Equilibrium:
    profile: MicroProfile
    potential: PotentialProfile
    eps: float
    x_grid: np.ndarray
    rho_plus: np.ndarray
    e_min: float
    v_max: float
    params: dict = field(default_factory=dict)

    def f0(self, x, v):
        """Phase-space density of the steady state (branch-aware)."""
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        e = self.eps ** 2 * (0.5 * v * v - self.potential.phi(x))
        if self.profile.kind != "multi":
            return self.profile.mu(e)
        e_arr = np.atleast_1d(e)
        v_arr = np.broadcast_to(np.atleast_1d(v), e_arr.shape)
        out = np.where(v_arr >= 0,
                       np.atleast_1d(self.profile.mu(e_arr, 1)),
                       np.atleast_1d(self.profile.mu(e_arr, -1)))
        return out if np.ndim(e) else float(out[0])

    def mu_prime_of_E(self, E, v_sign: int = 1):
        """mu'(eps^2 E), the kinetic weight of the linearized dynamics."""
        return self.profile.mu_prime(self.eps ** 2 * np.asarray(E, dtype=float), v_sign)

    def mu_second_of_E(self, E, v_sign: int = 1):
        return self.profile.mu_second(self.eps ** 2 * np.asarray(E, dtype=float), v_sign)


def _velocity_cutoff(profile: MicroProfile, pot: PotentialProfile, eps: float) -> float:
    """Smallest V with mu at the top of the well down by 1e-14 relative to
    its separatrix value, found by doubling."""
    phi_max = pot.phi_max
    floor = 1e-14 * max(float(profile.mu(0.0)), 1e-300)
    v = max(4.0 * np.sqrt(2.0 * phi_max), 8.0 / eps)
    for _ in range(200):
        e_top = eps ** 2 * (0.5 * v * v - phi_max)
        vals = [float(profile.mu(e_top, s))
                for s in ((1, -1) if profile.kind == "multi" else (1,))]
        if max(vals) < floor:
            return v
        v *= 2.0
    raise ValueError("velocity tail of mu does not decay; cutoff scan failed")


def _exterior_piece(profile, pot, eps, x, v_s, v_max, n, v_sign):
    """int_{v_s}^{v_max} mu(eps^2(v^2/2 - phi)) dv with the square-root
    kink at v_s removed by v = v_s + w^2."""
    u, w8 = gauss_legendre(n)
    wmax = np.sqrt(np.maximum(v_max - v_s, 0.0))
    ww = np.multiply.outer(wmax, u)          # (nx, n)
    v = v_s[:, None] + ww * ww
    e = eps ** 2 * (0.5 * v * v - pot.phi(x)[:, None])
    e = np.maximum(e, 1e-300)
    vals = profile.mu(e, v_sign) * 2.0 * ww
    return wmax * (vals @ w8) * wmax / np.where(wmax > 0, wmax, 1.0) if False else \
        (vals @ w8) * wmax


def ion_density(eq_or_parts, x=None, n_quad: int = 240):
    """Ion background rho_+ on given positions.

    Accepts either an Equilibrium (uses its stored mu, phi, eps) or a
    tuple (profile, potential, eps).  The velocity integral is split at
    the separatrix speed; the outer piece is desingularized so merely
    Hoelder-1/2 profiles integrate at Gauss-Legendre accuracy.
    """
    if isinstance(eq_or_parts, Equilibrium):
        profile, pot, eps = eq_or_parts.profile, eq_or_parts.potential, eq_or_parts.eps
        v_max = eq_or_parts.v_max
    else:
        profile, pot, eps = eq_or_parts
        v_max = _velocity_cutoff(profile, pot, eps)
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))

    phi_v = pot.phi(xs)
    v_s = np.sqrt(np.maximum(2.0 * phi_v, 0.0))

    # trapped piece: |v| < v_s, energies below the separatrix
    u, w8 = gauss_legendre(n_quad)
    vv = np.multiply.outer(v_s, u)
    e_in = eps ** 2 * (0.5 * vv * vv - phi_v[:, None])
    e_in = np.minimum(e_in, 0.0)
    inner = 2.0 * v_s * (profile.mu(e_in) @ w8)

    # free piece: |v| > v_s, one integral per branch
    if profile.kind == "multi":
        outer = (_exterior_piece(profile, pot, eps, xs, v_s, v_max, n_quad, 1)
                 + _exterior_piece(profile, pot, eps, xs, v_s, v_max, n_quad, -1))
    else:
        outer = 2.0 * _exterior_piece(profile, pot, eps, xs, v_s, v_max, n_quad, 1)

    rho = -pot.d2phi(xs) + eps * (inner + outer)
    return float(rho[0]) if scalar else rho


def ion_density_trapezoid(eq: Equilibrium, x, n_v: int = 1 << 16):
    """Wide-grid trapezoid route for the velocity integral; the independent
    cross-check used by the self-consistency report."""
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(xs.shape)
    for i, xi in enumerate(xs):
        phi_v = float(eq.potential.phi(xi))
        v_s = np.sqrt(max(2.0 * phi_v, 0.0))
        pieces = 0.0
        # split at the separatrix speed so the kink sits on a boundary
        for (a, b) in ((0.0, v_s), (v_s, eq.v_max)):
            if b <= a:
                continue
            v = np.linspace(a, b, n_v)
            e = eq.eps ** 2 * (0.5 * v * v - phi_v)
            if eq.profile.kind == "multi":
                f = eq.profile.mu(e, 1) + eq.profile.mu(e, -1)
            else:
                f = 2.0 * eq.profile.mu(e)
            pieces += np.trapezoid(f, v)
        out[i] = -float(eq.potential.d2phi(xi)) + eq.eps * pieces
    return float(out[0]) if scalar else out


def make_equilibrium(profile: MicroProfile, potential: PotentialProfile,
                     eps: float, n_x: int = 2048) -> Equilibrium:
    """Build the steady state and tabulate rho_+ on a uniform grid.

    rho_+ may fail positivity for large potential amplitudes; that is
    recorded by verify_assumptions rather than raised here, since the
    linearized machinery never uses rho_+ itself.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if -potential.phi_max <= profile.h:
        raise ValueError("trapped energies fall outside of the domain of mu")
    v_max = _velocity_cutoff(profile, potential, eps)
    x_grid = np.linspace(0.0, 1.0, n_x, endpoint=False)
    rho = ion_density((profile, potential, eps), x_grid)
    return Equilibrium(profile=profile, potential=potential, eps=float(eps),
                       x_grid=x_grid, rho_plus=rho, e_min=-potential.phi_max,
                       v_max=v_max)


def poisson_residual(eq: Equilibrium, n_v: int = 1 << 16) -> float:
    """max over the spatial grid of |-phi'' + eps*int f0 dv - rho_+| with
    the velocity integral recomputed by the trapezoid route."""
    rho_alt = ion_density_trapezoid(eq, eq.x_grid, n_v=n_v)
    return float(np.max(np.abs(rho_alt - eq.rho_plus)))


def forced_homogeneous_defect(eq: Equilibrium, n_v: int = 4096) -> float:
    """The quantity int |phi'|^2 dx - eps * intint mu'(eps^2 E) |phi'(x)|^2.

    For monotone decreasing profiles it is strictly positive for any
    nontrivial potential, which is why a constant ion background is
    impossible in that class.
    """
    xs = eq.x_grid
    dphi2 = eq.potential.dphi(xs) ** 2
    base = float(np.mean(dphi2))
    v = np.linspace(-eq.v_max, eq.v_max, n_v)
    e = eq.eps ** 2 * (0.5 * v[None, :] ** 2 - eq.potential.phi(xs)[:, None])
    mp = eq.profile.mu_prime(e)
    inner = np.trapezoid(mp, v, axis=1)
    correction = eq.eps * float(np.mean(dphi2 * inner))
    return base - correction


def verify_assumptions(eq: Equilibrium, n_e: int = 4096,
                       check_period: bool = True) -> dict:
    """Full structural report for an equilibrium.

    Collects the mu checks, the phi checks, rho_+ positivity, the
    existence margin phi'' < int mu(v^2/2) dv, quadrature-route agreement
    for the Poisson equation, and (optionally) direct monotonicity of the
    orbit period sampled over the trapped range.
    """
    report: dict = {"profile": eq.profile.name, "potential": eq.potential.name,
                    "eps": eq.eps, "entries": {}}
    entries = report["entries"]

    for name, entry in check_profile(eq.profile, n_e=n_e).items():
        entries[name] = entry
    for entry in check_potential(eq.potential, h=eq.profile.h):
        entries[entry.pop("name")] = entry

    # existence margin: phi''(x) < int mu(v^2/2) dv everywhere
    u, w = gauss_legendre(400)
    vmax = eq.v_max
    v = vmax * u
    if eq.profile.kind == "multi":
        mu_free = eq.profile.mu(0.5 * v * v, 1) + eq.profile.mu(0.5 * v * v, -1)
        total = vmax * float(mu_free @ w)
    else:
        total = 2.0 * vmax * float(eq.profile.mu(0.5 * v * v) @ w)
    d2 = eq.potential.d2phi(eq.x_grid)
    margin = total - float(np.max(d2))
    entries["phi3_existence"] = {
        "passed": margin > 0.0,
        "constant": margin,
        "witness": None if margin > 0 else float(eq.x_grid[int(np.argmax(d2))]),
        "detail": "int mu(v^2/2) dv minus max phi''",
    }

    rho_min = float(np.min(eq.rho_plus))
    entries["rho_plus_positive"] = {
        "passed": rho_min > 0.0,
        "constant": rho_min,
        "witness": None if rho_min > 0 else float(eq.x_grid[int(np.argmin(eq.rho_plus))]),
    }

    res = poisson_residual(eq)
    entries["poisson_self_consistency"] = {
        "passed": res < 1e-8,
        "constant": res,
        "detail": "two velocity-quadrature routes for rho_+",
    }

    if check_period:
        from .action_angle import choose_estar, period_deriv

        try:
            estar = choose_estar(eq)
            es = eq.e_min + (0.0 - eq.e_min) * np.array([1e-4, 0.1, 0.3, 0.6, 0.9, 0.999])
            tps = [period_deriv(eq.potential, estar, float(E)) for E in es]
            ok = all(tp > 0 for tp in tps)
            entries["phi4_period_monotone"] = {
                "passed": ok,
                "constant": float(min(tps)),
                "detail": "T'(E) sampled over the trapped range",
            }
        except Exception as exc:  # report, never raise
            entries["phi4_period_monotone"] = {"passed": False, "detail": str(exc)}

    report["classification"] = entries["regularity"]["class"]
    report["all_passed"] = all(v.get("passed", True) for v in entries.values())
    return report
