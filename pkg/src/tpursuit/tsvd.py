"""Tensor singular value decomposition and its rank-one building blocks.

The decomposition runs one complex SVD per DFT slice, but only on the
leading ``n3 // 2 + 1`` slices; the remaining slices are conjugate mirrors,
so the inverse transform returns real factors. Each left singular vector is
rotated so that its largest-magnitude entry is real and nonnegative, which
pins the per-slice phase and makes the factors deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalFailure, RankOutOfRange
from .tensor import Tensor3, conj_transpose, tprod

RANK_REL_TOL = 1e-10


@dataclass(frozen=True)
class TSVDFactors:
    """Orthogonal u (n1 x rho x n3), f-diagonal s (rho x rho x n3), orthogonal v (n2 x rho x n3)."""

    u: Tensor3
    s: Tensor3
    v: Tensor3

    @property
    def rho(self) -> int:
        return self.u.shape[1]

    def tube_norms(self) -> np.ndarray:
        """Frobenius norm of each singular tube s(i, i, :), nonincreasing in i."""
        rho = self.rho
        diag = self.s[np.arange(rho), np.arange(rho), :]
        return np.linalg.norm(diag, axis=1)


@dataclass(frozen=True)
class RankOneAtom:
    """Unit Frobenius norm tubal-rank-one tensor u * (s / ||s||) * v'.

    ``tube_norm`` is the Frobenius norm of the singular tube the atom was
    peeled from, which equals the inner product of the atom with its source
    tensor.
    """

    u: Tensor3
    v: Tensor3
    tube_norm: float
    atom: Tensor3


def _half_spectrum_svd(a: Tensor3, compute_uv: bool = True):
    """SVD of each leading DFT slice with the deterministic phase fix."""
    ah = np.fft.rfft(np.asarray(a, dtype=np.float64), axis=2)
    stack = np.ascontiguousarray(ah.transpose(2, 0, 1))
    try:
        if not compute_uv:
            return np.linalg.svd(stack, compute_uv=False)
        u, sig, vh = np.linalg.svd(stack, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure("slice SVD did not converge") from exc
    # rotate each (u column, vh row) pair so the largest-|.| entry of u,
    # first on ties, lands on the nonnegative real axis
    lead_idx = np.argmax(np.abs(u), axis=1)
    lead = np.take_along_axis(u, lead_idx[:, None, :], axis=1)[:, 0, :]
    mag = np.abs(lead)
    phase = np.where(mag > 0, lead / np.where(mag > 0, mag, 1.0), 1.0)
    u = u * phase.conj()[:, None, :]
    vh = vh * phase[:, :, None]
    return u, sig, vh


def _assemble(u, sig, vh, n3: int, width: int) -> TSVDFactors:
    """Inverse-transform half-spectrum factors, truncated to the given width."""
    uw = u[:, :, :width]
    vhw = vh[:, :width, :]
    sw = sig[:, :width]
    u_t = np.fft.irfft(uw.transpose(1, 2, 0), n=n3, axis=2)
    v_t = np.fft.irfft(vhw.conj().transpose(2, 1, 0), n=n3, axis=2)
    s_t = np.zeros((width, width, n3))
    tubes = np.fft.irfft(sw.T, n=n3, axis=1)
    s_t[np.arange(width), np.arange(width), :] = tubes
    return TSVDFactors(u=u_t, s=s_t, v=v_t)


def tsvd(a: Tensor3) -> TSVDFactors:
    """Full decomposition a = u * s * v' with rho = min(n1, n2) singular tubes.

    u and v have orthonormal lateral slices, s is f-diagonal with the
    diagonal of every DFT slice real, nonnegative and sorted descending.
    """
    n1, n2, n3 = a.shape
    u, sig, vh = _half_spectrum_svd(a)
    return _assemble(u, sig, vh, n3, min(n1, n2))


def truncated_tsvd(a: Tensor3, k: int) -> TSVDFactors:
    """Leading k singular tubes of the decomposition; the best tubal-rank-k fit."""
    n1, n2, n3 = a.shape
    if not 1 <= k <= min(n1, n2):
        raise RankOutOfRange(f"truncation width {k} outside [1, {min(n1, n2)}]")
    u, sig, vh = _half_spectrum_svd(a)
    return _assemble(u, sig, vh, n3, k)


def _tube_norms_from_half(sig: np.ndarray, n3: int) -> np.ndarray:
    # Parseval with conjugate symmetry: interior half-spectrum slices count twice
    weights = np.full(sig.shape[0], 2.0)
    weights[0] = 1.0
    if n3 % 2 == 0:
        weights[-1] = 1.0
    return np.sqrt((weights[:, None] * sig**2).sum(axis=0) / n3)


def tubal_rank(a: Tensor3, rel_tol: float = RANK_REL_TOL) -> int:
    """Number of singular tubes with norm above rel_tol times the leading one."""
    sig = _half_spectrum_svd(a, compute_uv=False)
    tubes = _tube_norms_from_half(sig, a.shape[2])
    if tubes.size == 0 or tubes[0] <= 0.0:
        return 0
    return int((tubes > rel_tol * tubes[0]).sum())


def leading_atoms(a: Tensor3, s: int, rel_tol: float = RANK_REL_TOL) -> list[RankOneAtom]:
    """Peel the s leading rank-one atoms off a tensor.

    Atom i is u(:, i, :) * (s(i, i, :) / theta_i) * v(:, i, :)' with
    theta_i the tube norm. Atoms whose tube norm falls below rel_tol times
    the leading tube norm are dropped, so a zero tensor yields an empty
    list and the result may be shorter than s.
    """
    n1, n2, n3 = a.shape
    if not 1 <= s <= min(n1, n2):
        raise RankOutOfRange(f"atom count {s} outside [1, {min(n1, n2)}]")
    factors = truncated_tsvd(a, s)
    tubes = factors.tube_norms()
    if tubes[0] <= 0.0:
        return []
    atoms = []
    for i in range(s):
        theta = float(tubes[i])
        if theta < rel_tol * tubes[0]:
            break
        u_i = factors.u[:, i:i + 1, :]
        v_i = factors.v[:, i:i + 1, :]
        tube = (factors.s[i, i, :] / theta).reshape(1, 1, n3)
        atom = tprod(tprod(u_i, tube), conj_transpose(v_i))
        atoms.append(RankOneAtom(u=u_i, v=v_i, tube_norm=theta, atom=atom))
    return atoms
