"""Monte Carlo Wegner and IDS experiments.

The expectation ``E[Tr chi_I(H_{B,L}^omega)]`` is replaced by a sample mean
over seeded disorder realisations.  Every replicate is keyed by
``(base_seed, box_multiple, replicate)`` and evaluated once for all
intervals, so counts for nested intervals come from the same operators.
"""
from __future__ import annotations

import csv
import functools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import InsufficientData
from .lattice import (TorusGeometry, assemble_free_hamiltonian, assemble_random_hamiltonian,
                      make_geometry)
from .model import (DisorderDistribution, SingleSitePotential, breather_sup_bound,
                    sample_disorder)
from .seeding import derive_seed
from .spectral import eigendecompose
from .ucp import compute_lambda0, estimate_c1

ENVELOPE_THETA = 0.5


@dataclass(frozen=True)
class WegnerExperiment:
    b_field: float
    grid_points_per_unit: int
    potential: SingleSitePotential
    dist: DisorderDistribution
    coupling: float
    intervals: tuple
    box_multiples: tuple = (1, 2)
    samples_per_cell: int = 50
    base_seed: int = 0
    e0: float | None = None
    certified: bool = False
    c_tilde: float | None = None

    def geometry(self, multiple: int) -> TorusGeometry:
        return make_geometry(self.b_field, multiple, self.grid_points_per_unit)

    @property
    def energy_ceiling(self) -> float:
        return self.e0 if self.e0 is not None else max(b for _, b in self.intervals)

    @property
    def lambda0(self) -> float | None:
        if self.c_tilde is None:
            return None
        return compute_lambda0(self.b_field, self.c_tilde, breather_sup_bound(self.potential))

    def validate(self) -> None:
        for a, b in self.intervals:
            if not a <= b:
                raise ValueError(f"interval [{a}, {b}] is empty")
            if b - a > self.b_field / 2 + 1e-12:
                raise ValueError(f"interval [{a}, {b}] is longer than B/2")
            if b > self.energy_ceiling:
                raise ValueError(f"interval [{a}, {b}] exceeds E0 = {self.energy_ceiling}")
        if self.coupling < 0:
            raise ValueError("coupling must be nonnegative")
        if self.certified:
            if self.c_tilde is None:
                raise ValueError("certified regime requires c_tilde")
            if not self.coupling < self.lambda0:
                raise ValueError(
                    f"coupling {self.coupling} is not below lambda0 = {self.lambda0:.6g}")


def nested_intervals(center: float, b_field: float, depth: int = 4) -> tuple:
    """Intervals of length B/2, B/4, ... centred at ``center``."""
    return tuple((center - b_field / 2 ** (k + 2), center + b_field / 2 ** (k + 2))
                 for k in range(depth))


def replicate_seed(base_seed: int, multiple: int, replicate: int) -> int:
    return derive_seed(base_seed, multiple, replicate)


def _replicate_spectrum(exp: WegnerExperiment, multiple: int, replicate: int) -> np.ndarray:
    geom = exp.geometry(multiple)
    if exp.coupling == 0:
        h = assemble_free_hamiltonian(geom)
    else:
        sample = sample_disorder(exp.dist, geom.box_side, replicate_seed(exp.base_seed, multiple, replicate))
        h = assemble_random_hamiltonian(geom, exp.potential, sample, exp.coupling)
    return eigendecompose(h).eigenvalues


def collect_spectra(exp: WegnerExperiment, multiple: int, mapper=map) -> list[np.ndarray]:
    task = functools.partial(_replicate_spectrum, exp, multiple)
    return list(mapper(task, range(exp.samples_per_cell)))


def count_closed(eigenvalues: np.ndarray, a: float, b: float) -> int:
    return int(np.searchsorted(eigenvalues, b, side="right")
               - np.searchsorted(eigenvalues, a, side="left"))


@dataclass
class WegnerReport:
    cells: list = field(default_factory=list)  # (L, interval_index, |I|, mean, stderr, samples)
    theta_fit: dict = field(default_factory=dict)
    theta_stderr: dict = field(default_factory=dict)
    area_ratio: dict = field(default_factory=dict)
    envelope_constant: float = float("nan")
    envelope_holds: bool = False
    metadata: dict = field(default_factory=dict)

    def means(self, box_side: float) -> list[float]:
        return [c[3] for c in self.cells if math.isclose(c[0], box_side)]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["L", "interval_index", "length", "mean_count", "stderr", "samples"])
            for L, idx, length, mean, err, n in self.cells:
                writer.writerow([f"{L:.12g}", idx, f"{length:.12g}", f"{mean:.12g}", f"{err:.12g}", n])

    def summary(self) -> dict:
        return {
            "theta_fit": {f"{k:.12g}": v for k, v in self.theta_fit.items()},
            "theta_stderr": {f"{k:.12g}": v for k, v in self.theta_stderr.items()},
            "area_ratio": {str(k): v for k, v in self.area_ratio.items()},
            "envelope_theta": ENVELOPE_THETA,
            "envelope_constant": self.envelope_constant,
            "envelope_holds": self.envelope_holds,
            **self.metadata,
        }

    def plot_data(self, path) -> None:
        """Two columns: log|I| and log mean_count, one block per box side."""
        with open(path, "w", encoding="utf-8") as fh:
            for L in sorted({c[0] for c in self.cells}):
                fh.write(f"# L = {L:.12g}\n")
                for c in self.cells:
                    if math.isclose(c[0], L) and c[3] > 0:
                        fh.write(f"{math.log(c[2]):.12g} {math.log(c[3]):.12g}\n")


def run_wegner(exp: WegnerExperiment, mapper=map) -> WegnerReport:
    exp.validate()
    report = WegnerReport()
    for m in exp.box_multiples:
        geom = exp.geometry(m)
        spectra = collect_spectra(exp, m, mapper)
        counts = np.array([[count_closed(w, a, b) for (a, b) in exp.intervals] for w in spectra],
                          dtype=float)
        n = counts.shape[0]
        mean = counts.mean(axis=0)
        err = counts.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros_like(mean)
        for idx, (a, b) in enumerate(exp.intervals):
            report.cells.append((geom.box_side, idx, b - a, float(mean[idx]), float(err[idx]), n))

    for L in sorted({c[0] for c in report.cells}):
        rows = [c for c in report.cells if math.isclose(c[0], L) and c[3] > 0]
        if len({c[2] for c in rows}) < 3:
            raise InsufficientData(f"fewer than 3 interval lengths with nonzero mean at L = {L:.6g}")
        fit = stats.linregress(np.log([c[2] for c in rows]), np.log([c[3] for c in rows]))
        report.theta_fit[L] = float(fit.slope)
        report.theta_stderr[L] = float(fit.stderr)

    multiples = [m for m in exp.box_multiples for _ in exp.intervals]
    means = {(m, c[1]): c[3] for m, c in zip(multiples, report.cells)}
    for m in exp.box_multiples:
        if 2 * m in exp.box_multiples:
            for idx in range(len(exp.intervals)):
                base = means[(m, idx)]
                report.area_ratio[(m, idx)] = means[(2 * m, idx)] / base if base > 0 else math.nan

    # envelope: constant calibrated on the smallest box, checked on every cell
    smallest = min(c[0] for c in report.cells)
    report.envelope_constant = max(
        c[3] / (c[2] ** ENVELOPE_THETA * c[0] ** 2) for c in report.cells if math.isclose(c[0], smallest))
    report.envelope_holds = all(
        c[3] <= report.envelope_constant * c[2] ** ENVELOPE_THETA * c[0] ** 2 * (1 + 1e-12) + 2 * c[4]
        for c in report.cells)
    report.metadata = {
        "b_field": exp.b_field, "coupling": exp.coupling, "lambda0": exp.lambda0,
        "c_tilde": exp.c_tilde, "base_seed": exp.base_seed,
        "samples_per_cell": exp.samples_per_cell, "box_multiples": list(exp.box_multiples),
        "intervals": [list(i) for i in exp.intervals],
        "replicate_seeds": {str(m): [replicate_seed(exp.base_seed, m, k)
                                     for k in range(exp.samples_per_cell)]
                            for m in exp.box_multiples},
    }
    return report


@dataclass
class IdsEstimate:
    box_side: float
    energies: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    holder_modulus: list = field(default_factory=list)  # (eps, sup_E N(E) - N(E - eps))

    def check_invariants(self) -> None:
        if np.any(np.diff(self.values) < 0) or np.any(self.values < 0):
            raise ValueError("IDS estimate must be nonnegative and nondecreasing")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["energy", "ids", "stderr"])
            for e, v, s in zip(self.energies, self.values, self.stderr):
                writer.writerow([f"{e:.12g}", f"{v:.12g}", f"{s:.12g}"])

    def holder_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["epsilon", "modulus"])
            for eps, mod in self.holder_modulus:
                writer.writerow([f"{eps:.12g}", f"{mod:.12g}"])

    def plot_data(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for e, v in zip(self.energies, self.values):
                fh.write(f"{e:.12g} {v:.12g}\n")


def run_ids(exp: WegnerExperiment, energy_grid, epsilons=None, mapper=map) -> IdsEstimate:
    """Disorder-averaged ``Tr chi_(-inf, E](H_L) / L^2`` on the largest box of ``exp``.

    The Hölder table evaluates ``N(E) - N(E - eps)`` with both counts taken
    from the stored spectra, so it is exact for the sampled operators.
    """
    energies = np.asarray(energy_grid, dtype=float)
    if np.any(energies > exp.energy_ceiling + 1e-12):
        raise ValueError("energy grid exceeds E0")
    m = max(exp.box_multiples)
    geom = exp.geometry(m)
    spectra = collect_spectra(exp, m, mapper)
    area = geom.area

    def ids(es):
        rows = np.array([np.searchsorted(w, es, side="right") for w in spectra], dtype=float) / area
        return rows

    rows = ids(energies)
    n = rows.shape[0]
    values = rows.mean(axis=0)
    stderr = rows.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros_like(values)
    if epsilons is None:
        span = energies[-1] - energies[0]
        epsilons = [span / 2 ** k for k in range(2, 10)]
    table = []
    for eps in epsilons:
        lower = ids(energies - eps).mean(axis=0)
        table.append((float(eps), float(np.max(values - lower))))
    return IdsEstimate(geom.box_side, energies, values, stderr, table)


def measure_c_tilde(b_field: float, e0: float, radius: float, grid_points_per_unit: int,
                    samples: int, seed: int, box_multiples=(1,), mapper=map) -> float:
    """Minimum measured UCP constant over the levels below ``E0 + B/4``."""
    levels = [n for n in range(1, 1000) if b_field * (2 * n - 1) <= e0 + b_field / 4]
    geoms = [make_geometry(b_field, m, grid_points_per_unit) for m in box_multiples]
    return min(estimate_c1(geoms, n, radius, samples, seed, mapper=mapper).c1_min for n in levels)


def write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
