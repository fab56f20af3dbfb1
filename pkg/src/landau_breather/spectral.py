"""Full eigendecompositions, interval counting and Landau-level projectors."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ClusterAmbiguous, ConvergenceFailure
from .lattice import HermitianOperator, TorusGeometry, write_matrix

GAP_RATIO = 10.0


@dataclass(frozen=True)
class SpectralData:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = field(default=None, repr=False)

    def counting_function(self, energies) -> np.ndarray:
        """Number of eigenvalues ``<= E`` for each ``E``."""
        return np.searchsorted(self.eigenvalues, np.asarray(energies, dtype=float), side="right")

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("eigenvalue\n")
            for e in self.eigenvalues:
                fh.write(f"{e:.17g}\n")


def eigendecompose(h, want_vectors: bool = False) -> SpectralData:
    m = h.entries if isinstance(h, HermitianOperator) else np.asarray(h)
    try:
        if want_vectors:
            w, v = np.linalg.eigh(m)
            return SpectralData(w, v)
        return SpectralData(np.linalg.eigvalsh(m))
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc


def count_in_interval(spec: SpectralData, a: float, b: float) -> int:
    """``Tr chi_[a, b](H)`` with both endpoints included."""
    if a > b:
        raise ValueError("empty interval: a > b")
    w = spec.eigenvalues
    return int(np.searchsorted(w, b, side="right") - np.searchsorted(w, a, side="left"))


@dataclass(frozen=True)
class LevelProjector:
    level_index: int
    level_energy: float
    basis: np.ndarray = field(repr=False)
    cluster_width: float
    eigenvalues: np.ndarray = field(repr=False, default=None)

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def save(self, path) -> None:
        write_matrix(path, self.basis)


def extract_level_projector(spec: SpectralData, geom: TorusGeometry, n: int,
                            gap_fraction: float = 0.25) -> LevelProjector:
    """Span of the eigenvectors within ``gap_fraction * 2B`` of ``B(2n - 1)``."""
    if spec.eigenvectors is None:
        raise ValueError("eigenvectors are required")
    if not 0 < gap_fraction < 1:
        raise ValueError("gap_fraction must lie in (0, 1)")
    level = geom.landau_level(n)
    w = spec.eigenvalues
    window = gap_fraction * 2 * geom.b_field
    idx = np.flatnonzero(np.abs(w - level) < window)
    if idx.size != geom.flux_quanta:
        raise ClusterAmbiguous(
            f"level {n}: {idx.size} eigenvalues within {window:.3g} of {level:.4g}, "
            f"expected {geom.flux_quanta}")
    width = float(np.max(np.abs(w[idx] - level)))
    below = w[idx[0] - 1] if idx[0] > 0 else -np.inf
    above = w[idx[-1] + 1] if idx[-1] + 1 < w.size else np.inf
    gap = min(w[idx[0]] - below, above - w[idx[-1]])
    if gap < GAP_RATIO * width:
        raise ClusterAmbiguous(
            f"level {n}: gap {gap:.3g} around the cluster is below {GAP_RATIO:g} x width {width:.3g}")
    return LevelProjector(n, level, spec.eigenvectors[:, idx], width, w[idx])


def direct_sum(projectors) -> LevelProjector:
    """Concatenate several level projectors (levels are mutually orthogonal)."""
    projectors = list(projectors)
    basis = np.concatenate([p.basis for p in projectors], axis=1)
    return LevelProjector(projectors[-1].level_index, projectors[-1].level_energy, basis,
                          max(p.cluster_width for p in projectors),
                          np.concatenate([p.eigenvalues for p in projectors]))


def compress(projector: LevelProjector | np.ndarray, diagonal) -> np.ndarray:
    """``basis^* D basis`` for a diagonal multiplication operator ``D``."""
    basis = projector.basis if isinstance(projector, LevelProjector) else np.asarray(projector)
    d = np.asarray(diagonal, dtype=float)
    out = basis.conj().T @ (d[:, None] * basis)
    return 0.5 * (out + out.conj().T)


def smallest_eigenvalue(matrix) -> float:
    return float(np.linalg.eigvalsh(matrix)[0])
