"""Single-site potentials, disorder laws and random breather potentials.

The breather potential on the torus of side ``L`` is

    V_omega(x) = sum_j u((x - j) / omega_j)

with ``x - j`` the shortest torus displacement.  Randomness enters through the
dilation ``omega_j`` only, so the dependence on the random parameters is
non-linear.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.optimize import minimize_scalar

from .errors import HypothesisViolation
from .seeding import uniforms_at

Profile = Callable[[np.ndarray], np.ndarray]

FD_STEP = 1e-4
FD_TOL = 1e-8


class PotentialKind(enum.Enum):
    SMOOTH_BUMP = "smooth-bump"
    HAT = "hat"
    CUSTOM = "custom"


def _smooth_bump(x: np.ndarray) -> np.ndarray:
    s2 = np.sum(np.asarray(x, dtype=float) ** 2, axis=-1)
    out = np.zeros_like(s2)
    inside = s2 < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s2[inside]))
    return out


def _hat(x: np.ndarray) -> np.ndarray:
    s = np.linalg.norm(np.asarray(x, dtype=float), axis=-1)
    return np.where(s < 1.0, 1.0 - s, 0.0)


@dataclass(frozen=True)
class SingleSitePotential:
    """A nonnegative, bounded, compactly supported profile ``u`` on the plane.

    ``profile`` is vectorised: it maps an array of shape ``(..., 2)`` to an
    array of shape ``(...)``.
    """

    profile: Profile = field(repr=False)
    support_radius: float
    sup_norm: float
    kind: PotentialKind = PotentialKind.CUSTOM
    name: str = "custom"

    def __call__(self, x) -> np.ndarray:
        return self.profile(np.asarray(x, dtype=float))

    @classmethod
    def from_callable(cls, profile: Profile, support_radius: float, name="custom",
                      resolution: int = 801) -> "SingleSitePotential":
        """Wrap a callable, measuring its sup norm on a fine grid."""
        g = np.linspace(-support_radius, support_radius, resolution)
        pts = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1)
        sup = float(np.max(profile(pts)))
        if sup <= 0:
            raise ValueError("profile vanishes on the sampling grid")
        return cls(profile, float(support_radius), sup, PotentialKind.CUSTOM, name)

    def check_invariants(self, resolution: int = 401) -> None:
        """Sampled checks of nonnegativity, support and sup norm."""
        rho = self.support_radius
        g = np.linspace(-1.5 * rho, 1.5 * rho, resolution)
        pts = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1)
        vals = self(pts)
        if np.any(vals < 0):
            raise ValueError("profile takes negative values")
        outside = np.linalg.norm(pts, axis=-1) >= rho
        if np.any(vals[outside] != 0):
            raise ValueError("profile does not vanish outside support_radius")
        if np.max(vals) > self.sup_norm * (1 + 1e-12):
            raise ValueError("sup_norm is exceeded")
        if np.max(vals) < 0.99 * self.sup_norm:
            raise ValueError("sup_norm is not attained within 1%")


def make_builtin_potential(kind) -> SingleSitePotential:
    """The two single-site potentials satisfying the monotonicity hypothesis."""
    kind = PotentialKind(kind)
    if kind is PotentialKind.SMOOTH_BUMP:
        return SingleSitePotential(_smooth_bump, 1.0, math.exp(-1.0), kind, kind.value)
    if kind is PotentialKind.HAT:
        return SingleSitePotential(_hat, 1.0, 1.0, kind, kind.value)
    raise ValueError(f"no built-in potential of kind {kind.value!r}")


def potential_by_name(name: str) -> SingleSitePotential:
    return make_builtin_potential(PotentialKind(name))


def breather_sup_bound(u: SingleSitePotential) -> float:
    """``ceil(support_radius)**2 * ||u||_inf``, an upper bound for ``||V_omega||_inf``."""
    return math.ceil(u.support_radius) ** 2 * u.sup_norm


# ---------------------------------------------------------------------------
# disorder


@dataclass(frozen=True)
class _UniformDensity:
    lo: float
    hi: float

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        return np.where((w >= self.lo) & (w <= self.hi), 1.0 / (self.hi - self.lo), 0.0)


@dataclass(frozen=True)
class _ScaledDensity:
    density: Callable
    total: float

    def __call__(self, w):
        return np.asarray(self.density(w), dtype=float) / self.total


@dataclass(frozen=True)
class DisorderDistribution:
    """A law on ``[omega_minus, omega_plus]`` with a bounded density."""

    omega_minus: float
    omega_plus: float
    density: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    density_sup: float
    name: str = "custom"
    _ppf_grid: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not 0 < self.omega_minus <= self.omega_plus < 0.5:
            raise ValueError("need 0 < omega_minus <= omega_plus < 1/2")

    @classmethod
    def uniform(cls, omega_minus: float, omega_plus: float) -> "DisorderDistribution":
        width = omega_plus - omega_minus
        if width <= 0:
            raise ValueError("uniform law needs omega_minus < omega_plus")
        return cls(omega_minus, omega_plus, _UniformDensity(omega_minus, omega_plus),
                   1.0 / width, "uniform")

    @classmethod
    def from_density(cls, density, omega_minus, omega_plus, resolution=4097):
        """Normalise an arbitrary bounded density and tabulate its inverse CDF."""
        w = np.linspace(omega_minus, omega_plus, resolution)
        f = np.asarray(density(w), dtype=float)
        cdf = cumulative_trapezoid(f, w, initial=0.0)
        total = cdf[-1]
        return cls(omega_minus, omega_plus, _ScaledDensity(density, float(total)),
                   float(f.max() / total), "tabulated", (w, cdf / total))

    def ppf(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if self._ppf_grid is None:
            return self.omega_minus + q * (self.omega_plus - self.omega_minus)
        w, cdf = self._ppf_grid
        return np.interp(q, cdf, w)

    def check_invariants(self, resolution: int = 20001) -> None:
        w = np.linspace(self.omega_minus, self.omega_plus, resolution)
        f = np.asarray(self.density(w), dtype=float)
        if abs(trapezoid(f, w) - 1.0) > 1e-6:
            raise ValueError("density does not integrate to one")
        if np.any(f > self.density_sup * (1 + 1e-12)):
            raise ValueError("density exceeds density_sup")


def lattice_sites(box_side: float) -> list[tuple[int, int]]:
    """Integer sites of the half-open box ``[-L/2, L/2)^2``, one per torus cell."""
    lo = math.ceil(-box_side / 2 - 1e-12)
    hi = math.ceil(box_side / 2 - 1e-12)
    ks = range(lo, hi)
    return [(a, b) for a in ks for b in ks]


@dataclass(frozen=True)
class DisorderSample:
    values: dict = field(repr=False)
    seed: int
    box_side: float

    def as_arrays(self):
        sites = np.array(list(self.values.keys()), dtype=float).reshape(-1, 2)
        omegas = np.array(list(self.values.values()), dtype=float)
        return sites, omegas

    def with_value(self, site, omega) -> "DisorderSample":
        vals = dict(self.values)
        vals[tuple(site)] = float(omega)
        return DisorderSample(vals, self.seed, self.box_side)


DISORDER_STREAM = 1


def sample_disorder(dist: DisorderDistribution, box_side: float, seed: int) -> DisorderSample:
    """One i.i.d. draw per site via inverse CDF of a site-keyed uniform."""
    if box_side < 1:
        raise ValueError("box_side must be at least 1")
    sites = lattice_sites(box_side)
    q = uniforms_at(seed, sites, stream=DISORDER_STREAM)[:, 0]
    omegas = np.clip(dist.ppf(q), dist.omega_minus, dist.omega_plus)
    return DisorderSample({s: float(w) for s, w in zip(sites, omegas)}, int(seed), box_side)


def torus_displacement(x: np.ndarray, y: np.ndarray, box_side: float) -> np.ndarray:
    """Shortest representative of ``x - y`` on the torus ``R^2 / L Z^2``."""
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return d - box_side * np.round(d / box_side)


def evaluate_breather(u: SingleSitePotential, sample: DisorderSample, x) -> np.ndarray:
    """Periodised breather potential at one point or an array of points ``(..., 2)``."""
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1, 2)
    total = np.zeros(len(flat))
    for site, omega in sample.values.items():
        d = torus_displacement(flat, np.asarray(site, dtype=float), sample.box_side)
        near = np.einsum("ij,ij->i", d, d) < (omega * u.support_radius) ** 2
        if np.any(near):
            total[near] += u(d[near] / omega)
    return total.reshape(x.shape[:-1]) if x.ndim > 1 else total[0]


# ---------------------------------------------------------------------------
# hypothesis certificate


def dilation_derivative(u: SingleSitePotential, x: np.ndarray, t, step: float = FD_STEP):
    """Central difference of ``t -> u(x / t)``; ``t`` broadcasts against ``x[..., 0]``."""
    t = np.asarray(t, dtype=float)[..., None]
    return (u(x / (t + step)) - u(x / (t - step))) / (2 * step)


@dataclass(frozen=True)
class HypothesisCertificate:
    """Witness that ``d/dt u(x/t) >= c_u * 1_{B(x0(t), r)}(x)`` on the sampled t grid."""

    c_u: float
    ball_radius: float
    t_grid: tuple
    centers: tuple
    per_t: tuple = ()
    notes: tuple = ()

    def center_map(self, t: float) -> np.ndarray:
        """Nearest verified center; the certificate only speaks for grid values of t."""
        k = int(np.argmin(np.abs(np.asarray(self.t_grid) - t)))
        return np.asarray(self.centers[k])

    def to_json(self) -> dict:
        return {
            "c_u": self.c_u,
            "r": self.ball_radius,
            "centers": [[float(t), float(c[0]), float(c[1])]
                        for t, c in zip(self.t_grid, self.centers)],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def _disk_samples(radius: float, resolution: int) -> np.ndarray:
    g = np.linspace(-radius, radius, resolution)
    pts = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
    pts = pts[np.einsum("ij,ij->i", pts, pts) <= radius ** 2 * (1 + 1e-12)]
    # extrema of monotone profiles sit on the boundary circle
    phi = np.linspace(0.0, 2 * np.pi, 4 * resolution, endpoint=False)
    rim = radius * np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    return np.concatenate([pts, rim])


def _candidate_centers(radius: float, n_radial: int, n_angular: int = 8) -> np.ndarray:
    reach = 0.5 - radius
    rho = np.linspace(0.0, reach, n_radial)[1:]
    phi = np.linspace(0.0, 2 * np.pi, n_angular, endpoint=False)
    ring = np.stack([np.outer(rho, np.cos(phi)), np.outer(rho, np.sin(phi))], axis=-1)
    centers = np.concatenate([np.zeros((1, 2)), ring.reshape(-1, 2)])
    # ball must sit inside the unit cell in the sup norm
    keep = np.max(np.abs(centers), axis=1) + radius <= 0.5 + 1e-12
    return centers[keep]


N_RADIAL_CENTERS = 33


def _refine_center(u, t, center, radius, disk, value):
    """Polish the center along its ray; the coarse grid limits resolution otherwise."""
    norm = float(np.hypot(*center))
    if norm == 0.0:
        return center, value
    direction = np.asarray(center) / norm
    step = (0.5 - radius) / (N_RADIAL_CENTERS - 1)
    lo = max(0.0, norm - step)
    hi = min(norm + step, (0.5 - radius) / max(np.max(np.abs(direction)), 1e-12))

    def neg(rho):
        return -float(np.min(dilation_derivative(u, rho * direction + disk, t)))

    res = minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": 1e-5})
    if -res.fun > value:
        return res.x * direction, float(-res.fun)
    return center, value


def ball_constant(u, t, center, radius, x_resolution=32) -> float:
    """``min`` of the finite-difference derivative over the closed ball."""
    pts = _disk_samples(radius, x_resolution) + np.asarray(center, dtype=float)
    return float(np.min(dilation_derivative(u, pts, t)))


def _off_ball_minimum(u, dist, ts, x_resolution) -> float:
    reach = u.support_radius * (dist.omega_plus + 2 * FD_STEP) * 1.05
    g = np.linspace(-reach, reach, 2 * x_resolution + 1)
    pts = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
    return float(min(np.min(dilation_derivative(u, pts, t)) for t in ts))


def verify_hypotheses(u: SingleSitePotential, dist: DisorderDistribution,
                      t_resolution: int = 16, x_resolution: int = 32,
                      radii=None) -> HypothesisCertificate:
    """Search for ``(c_u, r, x0(t))`` making the dilation derivative dominate a ball.

    For each candidate radius the best center is found separately for every
    t on the grid and the per-radius constant is the worst case over t.  The
    radius maximising ``c_u * r**2`` wins.
    """
    if t_resolution < 16 or x_resolution < 16:
        raise ValueError("resolutions must be at least 16")
    ts = np.linspace(dist.omega_minus, dist.omega_plus, t_resolution)
    floor = _off_ball_minimum(u, dist, ts, x_resolution)
    if floor < -FD_TOL:
        raise HypothesisViolation(
            f"d/dt u(x/t) takes negative values (min {floor:.3g}); u is not monotone under dilation")

    if radii is None:
        radii = [dist.omega_minus / 16, dist.omega_minus / 8, dist.omega_minus / 4]
    best = None
    for r in radii:
        disk = _disk_samples(r, x_resolution)
        centers = _candidate_centers(r, N_RADIAL_CENTERS)
        pts = centers[:, None, :] + disk[None, :, :]
        per_t, chosen = [], []
        for t in ts:
            vals = np.min(dilation_derivative(u, pts, t), axis=1)
            k = int(np.argmax(vals))
            center, val = _refine_center(u, t, centers[k], r, disk, float(vals[k]))
            per_t.append(val)
            chosen.append(tuple(float(c) for c in center))
        c_u = min(per_t)
        if c_u > FD_TOL and (best is None or c_u * r * r > best[0] * best[1] ** 2):
            best = (c_u, r, chosen, per_t)
    if best is None:
        raise HypothesisViolation(
            "no ball of the candidate radii carries a positive lower bound on d/dt u(x/t)")
    c_u, r, chosen, per_t = best
    return HypothesisCertificate(c_u, r, tuple(float(t) for t in ts), tuple(chosen), tuple(per_t))


def constant_for_center_map(u, dist, center_map, radius, t_resolution=64, x_resolution=64):
    """Worst-case ball constant for a prescribed center map and radius."""
    ts = np.linspace(dist.omega_minus, dist.omega_plus, t_resolution)
    return min(ball_constant(u, t, center_map(t), radius, x_resolution) for t in ts)


def reference_claims(kind, dist: DisorderDistribution) -> dict:
    """Literature configurations for the built-in potentials, with the claimed constant.

    Returns the claimed constant next to the constant measured by finite
    differences at the same center and radius; disagreements are reported,
    not corrected.
    """
    u = make_builtin_potential(kind)
    wm = dist.omega_minus
    if u.kind is PotentialKind.SMOOTH_BUMP:
        radius, claimed = wm / 8, wm ** 2 / 32
        center_map = lambda t: np.array([3 * wm / 8, 0.0])  # noqa: E731
        derivative = "2 |x|^2/t^3 (1-|x/t|^2)^-2 exp(-1/(1-|x/t|^2))"
    else:
        radius, claimed = wm / 4, 2.0
        center_map = lambda t: np.array([3 * t / 4, 0.0])  # noqa: E731
        derivative = "|x|/t^2 on |x|<t (the claimed chain uses |x|/t^3)"
    measured = constant_for_center_map(u, dist, center_map, radius)
    return {
        "kind": u.kind.value,
        "radius": radius,
        "claimed_c_u": claimed,
        "measured_c_u_at_claimed_centers": measured,
        "claim_holds": bool(measured >= claimed),
        "ratio_measured_over_claimed": measured / claimed,
        "direct_derivative": derivative,
    }
