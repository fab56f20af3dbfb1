"""Unique-continuation lower bounds and the abstract trace bound.

Two numerical checks live here:

* ``estimate_c1`` measures the smallest eigenvalue of ``Pi_n W_r(L) Pi_n``
  restricted to the range of ``Pi_n`` over boxes and random equidistributed
  point sets.  A positive, scale-stable value is the unique-continuation
  input to the Wegner estimate.
* ``check_trace_bound`` evaluates both sides of

      Tr chi_I(H+V) <= C3 Tr(chi_I(H+V) (W + W^2)),
      C3 = d^2 / (C2 d^2 - ||V||^2 (C2 + 1 + ||W||)),   d = dist(I, J^c),

  by exact eigenprojections.
"""
from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import unitary_group

from .errors import HypothesisFailure
from .lattice import TorusGeometry, assemble_free_hamiltonian, breather_on_grid
from .model import (DisorderDistribution, SingleSitePotential, lattice_sites,
                    sample_disorder, torus_displacement)
from .seeding import derive_seed, uniforms_at
from .spectral import (SpectralData, compress, direct_sum, eigendecompose,
                       extract_level_projector, smallest_eigenvalue)

EQUIDISTRIBUTED_STREAM = 2
PSD_TOL = 1e-10


# ---------------------------------------------------------------------------
# equidistributed sets and W_r(L)


@dataclass(frozen=True)
class EquidistributedSet:
    radius: float
    box_side: float
    points: dict = field(repr=False)

    def check_invariants(self) -> None:
        for j, x in self.points.items():
            if np.max(np.abs(np.asarray(x) - np.asarray(j))) + self.radius > 0.5 + 1e-12:
                raise ValueError(f"ball around site {j} leaves its unit cell")

    def with_radius(self, radius: float) -> "EquidistributedSet":
        return EquidistributedSet(radius, self.box_side, self.points)


def generate_equidistributed(radius: float, box_side: float, mode: str = "centers",
                             seed: int | None = None) -> EquidistributedSet:
    """One point per unit cell with its ``radius``-ball inside the cell.

    ``mode="centers"`` uses the cell centers; ``mode="seeded"`` draws each
    point uniformly from the admissible square, keyed by ``(seed, site)``.
    """
    if not 0 < radius < 0.5:
        raise ValueError("radius must lie in (0, 1/2)")
    sites = lattice_sites(box_side)
    if mode == "centers":
        pts = {j: (float(j[0]), float(j[1])) for j in sites}
    elif mode == "seeded":
        if seed is None:
            raise ValueError("seeded mode needs a seed")
        slack = 0.5 - radius
        q = uniforms_at(seed, sites, stream=EQUIDISTRIBUTED_STREAM, count=2)
        offs = (2 * q - 1) * slack
        pts = {j: (j[0] + float(o[0]), j[1] + float(o[1])) for j, o in zip(sites, offs)}
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return EquidistributedSet(radius, box_side, pts)


def balls_indicator(geom: TorusGeometry, centers, radius: float) -> np.ndarray:
    """0/1 diagonal of the union of open balls, torus distance, at grid points."""
    grid = geom.grid_points()
    mask = np.zeros(len(grid), dtype=bool)
    for c in centers:
        d = torus_displacement(grid, np.asarray(c, dtype=float), geom.box_side)
        mask |= np.einsum("ij,ij->i", d, d) < radius ** 2
    return mask.astype(float)


def assemble_w(points: EquidistributedSet, geom: TorusGeometry) -> np.ndarray:
    """Diagonal of ``chi_{W_r(L)}``; on the torus every cell contributes."""
    if not math.isclose(points.box_side, geom.box_side, rel_tol=1e-12):
        raise ValueError("point set and geometry live on different boxes")
    return balls_indicator(geom, points.points.values(), points.radius)


# ---------------------------------------------------------------------------
# C1 sweeps


@functools.lru_cache(maxsize=4)
def free_spectrum(geom: TorusGeometry) -> SpectralData:
    return eigendecompose(assemble_free_hamiltonian(geom), want_vectors=True)


@dataclass
class UcpReport:
    level_index: int
    radius: float
    entries: list = field(default_factory=list)

    @property
    def c1_min(self) -> float:
        return min(e[2] for e in self.entries)

    @property
    def c1_max(self) -> float:
        return max(e[2] for e in self.entries)

    def check_invariants(self) -> None:
        for L, k, c1 in self.entries:
            if not -PSD_TOL <= c1 <= 1 + PSD_TOL:
                raise ValueError(f"c1 estimate {c1} outside [0, 1] at L={L}, sample {k}")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["L", "sample_id", "c1"])
            for L, k, c1 in self.entries:
                writer.writerow([f"{L:.12g}", k, f"{c1:.12e}"])


def sample_set_seed(seed: int, box_multiple: int, sample_id: int) -> int:
    return derive_seed(seed, box_multiple, sample_id)


def _c1_cell(geom: TorusGeometry, n: int, radius: float, samples: int, seed: int,
             gap_fraction: float) -> list:
    proj = extract_level_projector(free_spectrum(geom), geom, n, gap_fraction)
    rows = []
    for k in range(samples):
        pts = generate_equidistributed(radius, geom.box_side, "seeded",
                                       sample_set_seed(seed, geom.box_multiple, k))
        c1 = smallest_eigenvalue(compress(proj, assemble_w(pts, geom)))
        rows.append((geom.box_side, k, c1))
    return rows


def estimate_c1(geoms, n: int, radius: float, samples: int, seed: int,
                gap_fraction: float = 0.25, mapper=map) -> UcpReport:
    """Smallest eigenvalue of the compressed ball indicator, per box and point set.

    ``mapper`` may be an executor's ``map``; rows are merged in input order.
    """
    geoms = list(geoms)
    if len({g.b_field for g in geoms}) > 1:
        raise ValueError("all geometries must share the magnetic field")
    if not radius > 0:
        raise ValueError("radius must be positive")
    cells = mapper(functools.partial(_c1_cell, n=n, radius=radius, samples=samples,
                                     seed=seed, gap_fraction=gap_fraction), geoms)
    report = UcpReport(n, radius)
    for rows in cells:
        report.entries.extend(rows)
    return report


def multilevel_c(geom: TorusGeometry, top_level: int, radius: float, samples: int,
                 seed: int, gap_fraction: float = 0.25) -> list[float]:
    """Experimental: compress ``W_r(L)`` onto the sum of levels ``1..top_level``."""
    spec = free_spectrum(geom)
    proj = direct_sum(extract_level_projector(spec, geom, k, gap_fraction)
                      for k in range(1, top_level + 1))
    out = []
    for k in range(samples):
        pts = generate_equidistributed(radius, geom.box_side, "seeded",
                                       sample_set_seed(seed, geom.box_multiple, k))
        out.append(smallest_eigenvalue(compress(proj, assemble_w(pts, geom))))
    return out


def compute_lambda0(b_field: float, c_tilde: float, v_inf: float) -> float:
    """Critical coupling ``B sqrt(C~ / (32 V_inf^2 (C~ + 2)))``."""
    if min(b_field, c_tilde, v_inf) <= 0:
        raise ValueError("all inputs must be positive")
    return b_field * math.sqrt(c_tilde / (32 * v_inf ** 2 * (c_tilde + 2)))


# ---------------------------------------------------------------------------
# abstract trace bound


def _as_matrix(op) -> np.ndarray:
    op = np.asarray(op)
    return np.diag(op).astype(complex) if op.ndim == 1 else op


@dataclass(frozen=True)
class TraceBoundInstance:
    h_op: np.ndarray = field(repr=False)
    v_op: np.ndarray = field(repr=False)
    w_op: np.ndarray = field(repr=False)
    interval_i: tuple
    interval_j: tuple
    c2: float
    seed: int | None = None
    h_spectrum: SpectralData | None = field(default=None, repr=False, compare=False)

    @property
    def distance(self) -> float:
        (i0, i1), (j0, j1) = self.interval_i, self.interval_j
        return min(i0 - j0, j1 - i1)

    def check_invariants(self) -> None:
        (i0, i1), (j0, j1) = self.interval_i, self.interval_j
        if not (j0 <= i0 <= i1 <= j1):
            raise ValueError("need I inside J")
        if self.distance <= 0:
            raise ValueError("dist(I, J^c) must be positive")
        w = _as_matrix(self.w_op)
        ev = np.linalg.eigvalsh(w)
        if ev[0] < -PSD_TOL * max(1.0, abs(ev[-1])):
            raise ValueError("W is not positive semidefinite")
        if self.c2 <= 0:
            raise ValueError("C2 must be positive")


@dataclass(frozen=True)
class TraceBoundResult:
    lhs: float
    rhs: float
    c3: float
    precondition_met: bool
    holds: bool
    seed: int | None = None
    v_norm: float = float("nan")
    threshold: float = float("nan")


def trace_constant(c2: float, distance: float, v_norm: float, w_norm: float) -> float:
    denom = c2 * distance ** 2 - v_norm ** 2 * (c2 + 1 + w_norm)
    return distance ** 2 / denom if denom > 0 else math.inf


def smallness_threshold(c2: float, distance: float, w_norm: float) -> float:
    """Largest admissible ``||V||`` (exclusive)."""
    return distance * math.sqrt(c2 / (c2 + 1 + w_norm))


def _eigh(op) -> SpectralData:
    op = np.asarray(op)
    if op.ndim == 1:
        order = np.argsort(op, kind="stable")
        return SpectralData(op[order], np.eye(op.size)[:, order])
    return eigendecompose(op, want_vectors=True)


def ucp_constant_on(spec: SpectralData, w, interval) -> float | None:
    """Smallest eigenvalue of ``W`` compressed to the spectral subspace of ``interval``."""
    lo, hi = interval
    sel = (spec.eigenvalues >= lo) & (spec.eigenvalues <= hi)
    if not np.any(sel):
        return None
    basis = spec.eigenvectors[:, sel]
    w = np.asarray(w)
    if w.ndim == 1:
        return smallest_eigenvalue(compress(basis, w))
    return smallest_eigenvalue(basis.conj().T @ w @ basis)


def check_trace_bound(inst: TraceBoundInstance) -> TraceBoundResult:
    inst.check_invariants()
    h = np.asarray(inst.h_op)
    v = np.asarray(inst.v_op)
    w = np.asarray(inst.w_op)
    w_mat = _as_matrix(w)
    w_norm = float(np.linalg.eigvalsh(w_mat)[-1])
    v_norm = float(np.max(np.abs(v))) if v.ndim == 1 else float(np.linalg.norm(v, 2))

    h_spec = inst.h_spectrum or _eigh(h)
    measured = ucp_constant_on(h_spec, w, inst.interval_j)
    if measured is not None and inst.c2 > measured + PSD_TOL * max(1.0, w_norm):
        raise HypothesisFailure(
            f"C2 = {inst.c2:.6g} exceeds the compressed minimum {measured:.6g} of W on J")

    total = _as_matrix(h) + _as_matrix(v) if (h.ndim == 2 or v.ndim == 2) else h + v
    pert = _eigh(total)
    i0, i1 = inst.interval_i
    sel = (pert.eigenvalues >= i0) & (pert.eigenvalues <= i1)
    lhs = float(np.count_nonzero(sel))
    phi = pert.eigenvectors[:, sel]
    ww = w_mat + w_mat @ w_mat
    weight = float(np.real(np.einsum("ik,ij,jk->", phi.conj(), ww, phi)))

    d = inst.distance
    threshold = smallness_threshold(inst.c2, d, w_norm)
    met = v_norm < threshold
    c3 = trace_constant(inst.c2, d, v_norm, w_norm)
    rhs = c3 * weight if math.isfinite(c3) else math.inf
    holds = lhs <= rhs + 1e-8
    return TraceBoundResult(lhs, rhs, c3, met, holds, inst.seed, v_norm, threshold)


def random_trace_instance(seed: int, max_dim: int = 40) -> TraceBoundInstance:
    """Random abstract instance: H spectrum in [-1, 2], I = [0.4, 0.6], J = [0.2, 0.8].

    ``W`` is a random nonnegative diagonal, ``C2`` is its compressed minimum on
    the J-subspace of ``H`` and ``V`` is a random Hermitian matrix scaled to a
    random fraction of the smallness threshold.
    """
    rng = np.random.default_rng(derive_seed(seed, 0))
    dim = int(rng.integers(2, max_dim + 1))
    evals = rng.uniform(-1.0, 2.0, dim)
    u = unitary_group.rvs(dim, random_state=rng) if dim > 1 else np.eye(1)
    h = (u * evals) @ u.conj().T
    h = 0.5 * (h + h.conj().T)
    w = rng.uniform(0.0, 1.0, dim)
    interval_i, interval_j = (0.4, 0.6), (0.2, 0.8)
    spec = SpectralData(np.sort(evals), u[:, np.argsort(evals)])
    c2 = ucp_constant_on(spec, w, interval_j)
    if c2 is None or c2 <= 0:
        c2 = 1.0 if c2 is None else max(float(np.min(w)), 1e-12)
    c2 = c2 * (1 - 1e-12)
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    v = 0.5 * (g + g.conj().T)
    threshold = smallness_threshold(c2, 0.2, float(np.max(w)))
    v *= rng.uniform(0.0, 1.0) * threshold / np.linalg.norm(v, 2)
    return TraceBoundInstance(h, v, w, interval_i, interval_j, c2, seed, spec)


def physical_trace_instance(geom: TorusGeometry, u: SingleSitePotential,
                            dist: DisorderDistribution, seed: int, radius: float = 0.2,
                            coupling_fraction: float | None = None) -> TraceBoundInstance:
    """Trace-bound instance built from the discretised Landau-breather operator.

    ``H`` is the free operator, ``V = lambda V_omega``, ``W`` the ball
    indicator of a seeded equidistributed set, ``I`` a random interval of
    length at most ``B/2`` containing the lowest level and
    ``J = [I- - B/4, I+ + B/4]``.  ``C2`` is measured on ``J``; ``lambda`` is a
    random fraction of the largest value meeting the smallness condition.
    """
    rng = np.random.default_rng(derive_seed(seed, 1))
    b = geom.b_field
    spec = free_spectrum(geom)
    level = float(np.mean(extract_level_projector(spec, geom, 1).eigenvalues))
    length = rng.uniform(0.05, 0.5) * b
    lo = level - rng.uniform(0.1, 0.9) * length
    interval_i = (lo, lo + length)
    interval_j = (interval_i[0] - b / 4, interval_i[1] + b / 4)
    pts = generate_equidistributed(radius, geom.box_side, "seeded", derive_seed(seed, 2))
    w = assemble_w(pts, geom)
    c2 = ucp_constant_on(spec, w, interval_j)
    if c2 is None or c2 <= 0:
        raise HypothesisFailure("W does not see the spectral subspace of J")
    c2 *= 1 - 1e-9
    sample = sample_disorder(dist, geom.box_side, derive_seed(seed, 3))
    potential = breather_on_grid(geom, u, sample)
    frac = rng.uniform(0.05, 0.95) if coupling_fraction is None else coupling_fraction
    coupling = frac * smallness_threshold(c2, b / 4, 1.0) / float(np.max(potential))
    h = assemble_free_hamiltonian(geom).entries
    return TraceBoundInstance(h, coupling * potential, w, interval_i, interval_j, c2, seed, spec)


def write_trace_csv(results, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["instance_seed", "lhs", "rhs", "c3", "precond", "holds"])
        for r in results:
            writer.writerow([r.seed, f"{r.lhs:.0f}", f"{r.rhs:.12e}", f"{r.c3:.12e}",
                             int(r.precondition_met), int(r.holds)])
