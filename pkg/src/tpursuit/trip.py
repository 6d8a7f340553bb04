"""Empirical restricted isometry constants for low-tubal-rank tensors.

``empirical_delta`` probes a measurement map with random unit-norm
tubal-rank-r tensors and reports the worst observed distortion
max |  ||phi(x)||^2 - 1 |, a lower bound on the true constant.
``scaling_study`` repeats that over a grid of measurement counts; for
subgaussian ensembles the median distortion should fall like m^(-1/2).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import NumericalFailure, RankOutOfRange
from .measure import MeasurementMap, apply, gaussian_ensemble, rademacher_ensemble
from .tensor import Tensor3, conj_transpose, frobenius_norm, tprod

STUDY_HEADER = ("m", "delta_median", "delta_q1", "delta_q3", "trials", "samples")

_ENSEMBLES = {"gaussian": gaussian_ensemble, "rademacher": rademacher_ensemble}


@dataclass(frozen=True)
class TripStudyConfig:
    dims: tuple
    r: int
    m_grid: tuple
    n_samples: int = 200
    trials: int = 20
    seed: int = 0
    ensemble: str = "gaussian"

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "m_grid", tuple(int(m) for m in self.m_grid))
        if self.r < 1 or self.r > min(self.dims[0], self.dims[1]):
            raise RankOutOfRange(f"probe rank {self.r} outside [1, {min(self.dims[:2])}]")
        if not self.m_grid or any(m < 1 for m in self.m_grid):
            raise ValueError("m_grid must hold positive measurement counts")
        if self.n_samples < 1 or self.trials < 1:
            raise ValueError("n_samples and trials must be positive")
        if self.ensemble not in _ENSEMBLES:
            raise ValueError(f"ensemble must be one of {sorted(_ENSEMBLES)}")


@dataclass(frozen=True)
class StudyRow:
    m: int
    delta_median: float
    delta_q1: float
    delta_q3: float
    trials: int
    samples: int


def _orthonormal_lateral(n: int, width: int, n3: int, rng) -> Tensor3:
    # QR-orthonormalize a Gaussian block in each leading DFT slice and
    # mirror back; the result has orthonormal lateral slices
    g = rng.standard_normal((n, width, n3))
    gh = np.fft.rfft(g, axis=2)
    qs = np.empty_like(gh)
    for k in range(gh.shape[2]):
        q, _ = np.linalg.qr(gh[:, :, k])
        qs[:, :, k] = q
    return np.fft.irfft(qs, n=n3, axis=2)


def sample_rank_r_unit(dims, r: int, rng) -> Tensor3:
    """Random tensor of tubal rank r with unit Frobenius norm.

    Factors come from per-slice QR of Gaussian blocks, the singular tubes
    from Gaussian draws, and the product is normalized.
    """
    n1, n2, n3 = (int(d) for d in dims)
    if not 1 <= r <= min(n1, n2):
        raise RankOutOfRange(f"probe rank {r} outside [1, {min(n1, n2)}]")
    u = _orthonormal_lateral(n1, r, n3, rng)
    v = _orthonormal_lateral(n2, r, n3, rng)
    tubes = rng.standard_normal((r, n3))
    s = np.zeros((r, r, n3))
    s[np.arange(r), np.arange(r), :] = tubes
    x = tprod(tprod(u, s), conj_transpose(v))
    norm = frobenius_norm(x)
    if norm == 0.0:
        raise NumericalFailure("degenerate zero draw for a rank-r probe")
    return x / norm


def empirical_delta(phi: MeasurementMap, dims, r: int, n_samples: int, rng) -> float:
    """Worst distortion of n_samples unit rank-r probes under phi.

    A sampled lower bound on the restricted isometry constant: the true
    constant takes a supremum over the whole rank-r set.
    """
    worst = 0.0
    for _ in range(int(n_samples)):
        x = sample_rank_r_unit(dims, r, rng)
        bx = apply(phi, x)
        worst = max(worst, abs(float(bx @ bx) - 1.0))
    return worst


def scaling_study(cfg: TripStudyConfig) -> list[StudyRow]:
    """Median and quartiles of the empirical constant per measurement count.

    Trial t of grid point i uses the derived seed cfg.seed + i*trials + t
    for both the ensemble draw and the probe stream, so results do not
    depend on evaluation order. For a doubling grid the medians must be
    nonincreasing up to one Monte Carlo inversion; more raises
    NumericalFailure.
    """
    make = _ENSEMBLES[cfg.ensemble]
    rows = []
    for i, m in enumerate(cfg.m_grid):
        deltas = np.empty(cfg.trials)
        for t in range(cfg.trials):
            trial_seed = cfg.seed + i * cfg.trials + t
            phi = make(m, cfg.dims, seed=trial_seed)
            probe_rng = np.random.default_rng([trial_seed, 1])
            deltas[t] = empirical_delta(phi, cfg.dims, cfg.r, cfg.n_samples, probe_rng)
        q1, med, q3 = np.percentile(deltas, [25.0, 50.0, 75.0])
        rows.append(StudyRow(m=m, delta_median=float(med), delta_q1=float(q1),
                             delta_q3=float(q3), trials=cfg.trials, samples=cfg.n_samples))
    doubling = all(b >= 2 * a for a, b in zip(cfg.m_grid, cfg.m_grid[1:]))
    if doubling and len(rows) > 1:
        inversions = sum(rows[i + 1].delta_median > rows[i].delta_median
                         for i in range(len(rows) - 1))
        if inversions > 1:
            raise NumericalFailure(
                f"median distortion rose {inversions} times along a doubling grid"
            )
    return rows


def write_study_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(STUDY_HEADER)
        for row in rows:
            writer.writerow([
                row.m,
                f"{row.delta_median:.17g}",
                f"{row.delta_q1:.17g}",
                f"{row.delta_q3:.17g}",
                row.trials,
                row.samples,
            ])
