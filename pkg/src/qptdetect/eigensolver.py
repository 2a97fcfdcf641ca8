"""Ground states and low-lying spectra of sparse Hamiltonians."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from qptdetect.errors import ConvergenceError
from qptdetect.hilbert import BasisMap, SparseHamiltonian

DENSE_LIMIT = 1024
RESIDUAL_TOL = 1e-9


@dataclass
class GroundState:
    """Normalized lowest eigenvector with energy and gap metadata.

    ``amplitudes`` live on ``basis`` (a sector or the full space); use
    :meth:`full_vector` for the 2^N representation.
    """

    amplitudes: np.ndarray
    energy: float
    gap: float
    degenerate: bool
    n_sites: int
    basis: BasisMap | None = None
    sector: float | None = None
    _full: np.ndarray | None = field(default=None, repr=False, compare=False)

    def full_vector(self) -> np.ndarray:
        if self._full is None:
            if self.basis is None or self.basis.is_full:
                self._full = np.asarray(self.amplitudes)
            else:
                full = np.zeros(1 << self.n_sites, dtype=self.amplitudes.dtype)
                full[self.basis.states] = self.amplitudes
                self._full = full
        return self._full

    @classmethod
    def from_vector(cls, psi, energy=float("nan"), gap=float("nan")) -> "GroundState":
        """Wrap an arbitrary full-space pure state (tests, hand-built states)."""
        psi = np.asarray(psi, dtype=complex)
        n = int(round(math.log2(psi.size)))
        if 1 << n != psi.size:
            raise ValueError("state length must be a power of two")
        psi = psi / np.linalg.norm(psi)
        return cls(psi, energy, gap, False, n, BasisMap.full(n), None)


def _fix_phase(v: np.ndarray) -> np.ndarray:
    # largest component real positive; makes output independent of solver phase
    k = int(np.argmax(np.abs(v)))
    phase = v[k] / abs(v[k])
    v = v / phase
    if np.iscomplexobj(v) and np.abs(v.imag).max() < 1e-15:
        v = v.real.copy()
    return v / np.linalg.norm(v)


def _iteration_cap(dim: int) -> int:
    return max(100, int(10 * math.sqrt(dim)))


def _lowest(h: SparseHamiltonian, k: int, tol: float, seed: int):
    """Lowest ``k`` eigenpairs, ascending."""
    dim = h.dim
    k = min(k, dim)
    if dim <= DENSE_LIMIT:
        w, v = sla.eigh(h.toarray(), subset_by_index=(0, k - 1))
        return w, v
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(dim)
    if np.iscomplexobj(h.matrix.data):
        v0 = v0 + 1j * rng.standard_normal(dim)
    # ARPACK implicitly restarted Lanczos; basis vectors are fully reorthogonalized
    ncv = min(dim, max(2 * k + 1, 30))
    try:
        w, v = spla.eigsh(h.matrix, k=k, which="SA", v0=v0, ncv=ncv,
                          tol=min(tol, 1e-12), maxiter=_iteration_cap(dim))
    except spla.ArpackNoConvergence as exc:
        best = float("inf")
        if len(exc.eigenvalues):
            r = h.matrix @ exc.eigenvectors - exc.eigenvectors * exc.eigenvalues
            best = float(np.linalg.norm(r, axis=0).min())
        raise ConvergenceError(f"Lanczos did not converge for dim={dim}", best) from exc
    order = np.argsort(w)
    return w[order], v[:, order]


def ground_state(h: SparseHamiltonian, tol: float = 1e-10, seed: int = 0) -> GroundState:
    """Lowest eigenpair of ``h``.

    Dense diagonalization up to dimension 1024, ARPACK Lanczos above. The
    ``degenerate`` flag is set when the gap to the next level is below
    ``1e-8 * max(1, |E0|)``.
    """
    if not 0 < tol <= 1e-6:
        raise ValueError("tol must lie in (0, 1e-6]")
    k = 2 if h.dim > 1 else 1
    w, v = _lowest(h, k, tol, seed)
    psi = _fix_phase(v[:, 0])
    e0 = float(w[0])
    res = float(np.linalg.norm(h.matrix @ psi - e0 * psi))
    if res > RESIDUAL_TOL:
        raise ConvergenceError(f"ground state residual {res:.3e} above {RESIDUAL_TOL}", res)
    gap = float(w[1] - w[0]) if k > 1 else float("inf")
    degenerate = gap < 1e-8 * max(1.0, abs(e0))
    return GroundState(psi, e0, gap, degenerate, h.basis.n_sites, h.basis, h.sector)


def low_spectrum(h: SparseHamiltonian, k: int, tol: float = 1e-10, seed: int = 0) -> np.ndarray:
    """The ``k`` (<= 8) lowest eigenvalues in ascending order."""
    if not 1 <= k <= 8:
        raise ValueError("k must lie in [1, 8]")
    w, v = _lowest(h, k, tol, seed)
    res = np.linalg.norm(h.matrix @ v - v * w, axis=0)
    if np.any(res > 1e-8):
        raise ConvergenceError("low_spectrum residual above 1e-8", float(res.max()))
    return np.asarray(w, dtype=float)
