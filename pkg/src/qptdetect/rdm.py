"""One- and two-site reduced density matrices of pure chain states.

Matrices use the up-first ordering: (up, down) for one site and
(uu, ud, du, dd) for a pair, first slot = site ``i``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qptdetect.errors import NumericalIntegrityError

INTEGRITY_TOL = 1e-10


@dataclass(frozen=True)
class Rdm1:
    matrix: np.ndarray
    site: int

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


@dataclass(frozen=True)
class Rdm2:
    matrix: np.ndarray
    i: int
    j: int

    @property
    def r(self) -> int:
        return self.j - self.i

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    def trace_second(self) -> np.ndarray:
        return np.einsum("abcb->ac", self.matrix.reshape(2, 2, 2, 2))

    def trace_first(self) -> np.ndarray:
        return np.einsum("abad->bd", self.matrix.reshape(2, 2, 2, 2))


def check_density_matrix(rho: np.ndarray, tol: float = INTEGRITY_TOL) -> None:
    """Raise NumericalIntegrityError unless ``rho`` is Hermitian, unit trace, PSD."""
    rho = np.asarray(rho)
    if not np.all(np.isfinite(rho)):
        raise NumericalIntegrityError("density matrix has non-finite entries")
    herm = np.abs(rho - rho.conj().T).max()
    if herm > tol:
        raise NumericalIntegrityError(f"density matrix not Hermitian (deviation {herm:.2e})")
    tr = np.trace(rho).real
    if abs(tr - 1) > tol:
        raise NumericalIntegrityError(f"density matrix trace {tr!r} != 1")
    wmin = np.linalg.eigvalsh((rho + rho.conj().T) / 2).min()
    if wmin < -tol:
        raise NumericalIntegrityError(f"density matrix has negative eigenvalue {wmin:.2e}")


def _state_tensor(state) -> tuple[np.ndarray, int]:
    psi = state.full_vector() if hasattr(state, "full_vector") else np.asarray(state)
    n = psi.size.bit_length() - 1
    if 1 << n != psi.size:
        raise ValueError("state length must be a power of two")
    # axis 0 of the reshaped tensor is the most significant bit, i.e. site N
    return psi.reshape((2,) * n), n


def _check_site(site: int, n: int) -> None:
    if not 1 <= site <= n:
        raise IndexError(f"site {site} out of range 1..{n}")


def rdm1(state, site: int) -> Rdm1:
    """Single-site reduced density matrix of a pure state (GroundState or vector)."""
    t, n = _state_tensor(state)
    _check_site(site, n)
    a = np.moveaxis(t, n - site, 0).reshape(2, -1)
    m = a @ a.conj().T
    m = m[::-1, ::-1]
    m = (m + m.conj().T) / 2
    check_density_matrix(m)
    return Rdm1(m, site)


def rdm2(state, i: int, j: int) -> Rdm2:
    """Two-site reduced density matrix of sites ``i`` and ``j`` (1-based)."""
    t, n = _state_tensor(state)
    _check_site(i, n)
    _check_site(j, n)
    if i == j:
        raise IndexError("rdm2 needs two distinct sites")
    a = np.moveaxis(t, (n - i, n - j), (0, 1)).reshape(4, -1)
    m = a @ a.conj().T
    m = m[::-1, ::-1]
    m = (m + m.conj().T) / 2
    check_density_matrix(m)
    return Rdm2(m, i, j)


def anchor_rdms(state, anchor: int, others) -> list[Rdm2]:
    """rdm2(anchor, k) for every k in ``others``; the anchor axis is moved once."""
    t, n = _state_tensor(state)
    _check_site(anchor, n)
    front = np.moveaxis(t, n - anchor, 0)
    out = []
    for k in others:
        _check_site(k, n)
        if k == anchor:
            raise IndexError("rdm2 needs two distinct sites")
        ax = n - k
        ax = ax + 1 if ax < n - anchor else ax
        a = np.moveaxis(front, ax, 1).reshape(4, -1)
        m = a @ a.conj().T
        m = m[::-1, ::-1]
        m = (m + m.conj().T) / 2
        check_density_matrix(m)
        out.append(Rdm2(m, anchor, k))
    return out
