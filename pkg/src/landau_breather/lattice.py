"""Peierls finite-difference discretisation of the magnetic torus.

The torus side is an integer multiple of ``L_B = K_B sqrt(4 pi / B)`` with
``K_B = 2 ceil(sqrt(B / (4 pi)))``, so the total flux ``Phi = B L^2 / (2 pi)``
is an even integer and magnetic-periodic boundary conditions are consistent.

Grid point ``(i, j)`` sits at ``(-L/2 + i h, -L/2 + j h)`` and has matrix index
``i * N + j``.
"""
from __future__ import annotations

import functools
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BoxMismatch, FluxTooCoarse
from .model import DisorderSample, SingleSitePotential, evaluate_breather

MAX_PLAQUETTE_FLUX = 0.05
GAUGES = ("x", "y")


def integer_flux_scale(b_field: float) -> tuple[int, float]:
    """Return ``(K_B, L_B)``."""
    k_b = 2 * math.ceil(math.sqrt(b_field / (4 * math.pi)) - 1e-12)
    return k_b, k_b * math.sqrt(4 * math.pi / b_field)


@dataclass(frozen=True)
class TorusGeometry:
    b_field: float
    box_multiple: int
    grid_points_per_unit: int

    @property
    def k_b(self) -> int:
        return integer_flux_scale(self.b_field)[0]

    @property
    def l_b(self) -> float:
        return integer_flux_scale(self.b_field)[1]

    @property
    def box_side(self) -> float:
        return self.box_multiple * self.l_b

    @property
    def n_grid(self) -> int:
        """Grid points per axis; ``h = L / N`` so the flux bookkeeping is exact."""
        return max(3, round(self.grid_points_per_unit * self.box_side))

    @property
    def spacing(self) -> float:
        return self.box_side / self.n_grid

    @property
    def dimension(self) -> int:
        return self.n_grid ** 2

    @property
    def flux_quanta(self) -> int:
        return 2 * self.k_b ** 2 * self.box_multiple ** 2

    @property
    def plaquette_flux_fraction(self) -> float:
        return self.flux_quanta / self.n_grid ** 2

    @property
    def area(self) -> float:
        return self.box_side ** 2

    def grid_points(self) -> np.ndarray:
        """Coordinates of all grid points, shape ``(N*N, 2)`` in matrix order."""
        c = -self.box_side / 2 + self.spacing * np.arange(self.n_grid)
        xx, yy = np.meshgrid(c, c, indexing="ij")
        return np.stack([xx.ravel(), yy.ravel()], axis=-1)

    def landau_level(self, n: int) -> float:
        return self.b_field * (2 * n - 1)

    def describe(self) -> dict:
        return {
            "b_field": self.b_field, "k_b": self.k_b, "l_b": self.l_b,
            "box_multiple": self.box_multiple, "box_side": self.box_side,
            "grid_points_per_unit": self.grid_points_per_unit, "n_grid": self.n_grid,
            "flux_quanta": self.flux_quanta, "plaquette_flux_fraction": self.plaquette_flux_fraction,
        }


def make_geometry(b_field: float, box_multiple: int, grid_points_per_unit: int) -> TorusGeometry:
    if b_field <= 0:
        raise ValueError("b_field must be positive")
    if int(box_multiple) != box_multiple or box_multiple < 1:
        raise ValueError("box_multiple must be a positive integer")
    geom = TorusGeometry(float(b_field), int(box_multiple), int(grid_points_per_unit))
    frac = geom.plaquette_flux_fraction
    if frac >= MAX_PLAQUETTE_FLUX:
        raise FluxTooCoarse(
            f"flux per plaquette B h^2/(2 pi) = {frac:.4f} >= {MAX_PLAQUETTE_FLUX}; refine the grid")
    return geom


@dataclass(frozen=True)
class HermitianOperator:
    entries: np.ndarray = field(repr=False)
    site_index: np.ndarray | None = field(default=None, repr=False)

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    def hermiticity_defect(self) -> float:
        m = self.entries
        scale = np.max(np.abs(m)) or 1.0
        return float(np.max(np.abs(m - m.conj().T)) / scale)

    def plus_diagonal(self, diag) -> "HermitianOperator":
        m = self.entries.copy()
        m[np.diag_indices_from(m)] += np.asarray(diag, dtype=float)
        m.flags.writeable = False
        return HermitianOperator(m, self.site_index)

    def save(self, path) -> None:
        write_matrix(path, self.entries)


def write_matrix(path, matrix) -> None:
    """Little-endian ``uint64 rows, uint64 cols`` header then row-major complex128."""
    m = np.ascontiguousarray(matrix, dtype="<c16")
    rows, cols = m.shape
    with open(Path(path), "wb") as fh:
        fh.write(struct.pack("<QQ", rows, cols))
        fh.write(m.tobytes(order="C"))


def read_matrix(path) -> np.ndarray:
    with open(Path(path), "rb") as fh:
        rows, cols = struct.unpack("<QQ", fh.read(16))
        data = np.frombuffer(fh.read(), dtype="<c16")
    return data.reshape(rows, cols).copy()


def peierls_matrix(n_grid: int, spacing: float, plaquette_phase: float, gauge: str = "x") -> np.ndarray:
    """Five-point magnetic Laplacian on an ``n_grid x n_grid`` torus.

    ``gauge="x"`` puts the vector potential on the y-links (phase
    ``phi * i`` at column ``i``) and the twist on the x-links crossing the
    seam; ``gauge="y"`` is the mirror convention.  Both give flux
    ``plaquette_phase`` through every plaquette and the same holonomies around
    the two cycles, hence unitarily equivalent operators.
    """
    if gauge not in GAUGES:
        raise ValueError(f"gauge must be one of {GAUGES}")
    n = n_grid
    phi = plaquette_phase
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    a = (i * n + j).ravel()
    bx = (((i + 1) % n) * n + j).ravel()
    by = (i * n + (j + 1) % n).ravel()
    if gauge == "x":
        tx = np.where(i == n - 1, -phi * n * j, 0.0)
        ty = phi * i
    else:
        tx = -phi * j
        ty = np.where(j == n - 1, phi * n * i, 0.0)
    inv_h2 = 1.0 / spacing ** 2
    m = np.zeros((n * n, n * n), dtype=complex)
    m[a, a] = 4 * inv_h2
    for b, theta in ((bx, tx.ravel()), (by, ty.ravel())):
        hop = -np.exp(1j * theta) * inv_h2
        m[b, a] += hop
        m[a, b] += hop.conj()
    return m


@functools.lru_cache(maxsize=8)
def _free_entries(geom: TorusGeometry, gauge: str) -> np.ndarray:
    phase = 2 * math.pi * geom.flux_quanta / geom.n_grid ** 2
    m = peierls_matrix(geom.n_grid, geom.spacing, phase, gauge)
    m.flags.writeable = False
    return m


def assemble_free_hamiltonian(geom: TorusGeometry, gauge: str = "x") -> HermitianOperator:
    """Discretised Landau Hamiltonian ``(-i grad - A)^2`` on the torus."""
    if geom.plaquette_flux_fraction >= MAX_PLAQUETTE_FLUX:
        raise FluxTooCoarse("geometry violates the plaquette flux bound")
    return HermitianOperator(_free_entries(geom, gauge), geom.grid_points())


def breather_on_grid(geom: TorusGeometry, u: SingleSitePotential, sample: DisorderSample) -> np.ndarray:
    if not math.isclose(sample.box_side, geom.box_side, rel_tol=1e-12):
        raise BoxMismatch(
            f"disorder sample box {sample.box_side} differs from geometry box {geom.box_side}")
    return evaluate_breather(u, sample, geom.grid_points())


def assemble_random_hamiltonian(geom: TorusGeometry, u: SingleSitePotential,
                                sample: DisorderSample, coupling: float,
                                gauge: str = "x") -> HermitianOperator:
    """``H_B + coupling * V_omega`` with the potential sampled at grid points."""
    if coupling < 0:
        raise ValueError("coupling must be nonnegative")
    potential = breather_on_grid(geom, u, sample)
    return assemble_free_hamiltonian(geom, gauge).plus_diagonal(coupling * potential)
