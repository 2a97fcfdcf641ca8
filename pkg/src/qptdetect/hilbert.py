"""Spin-1/2 Hilbert spaces and sparse Hamiltonians for periodic chains.

Basis convention (fixed globally): site 1 is the least significant bit of the
basis index and a set bit means spin up, i.e. ``sigma^z = +1``.

Families and parameter keys:

=======  ==============================  =========================================
family   params                          Hamiltonian
=======  ==============================  =========================================
xxz      delta                           sum_j XX + YY + delta ZZ
ssh      eta                             -sum_bonds t_b (XX + YY),
                                         t = (1+eta)/2 intra, (1-eta)/2 inter cell
sshxy    gamma1, gamma2                  -sum_cells anisotropic XY on odd/even bonds
xymi     gamma, lambda, alpha, beta      XY in a field + three/four spin terms
=======  ==============================  =========================================
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from qptdetect.errors import InvalidModelError, UnsupportedSectorError

FAMILIES = {
    "xxz": ("delta",),
    "ssh": ("eta",),
    "sshxy": ("gamma1", "gamma2"),
    "xymi": ("gamma", "lambda", "alpha", "beta"),
}

# families whose Hamiltonian conserves total S^z for every parameter value
SZ_CONSERVING = ("xxz", "ssh")

_PARAM_ALIASES = {"lam": "lambda", "delta_": "delta"}


@dataclass(frozen=True)
class ModelSpec:
    """A model family, its couplings and the (periodic) chain length."""

    family: str
    n_sites: int
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        fam = str(self.family).lower().replace("-", "").replace("_", "")
        if fam not in FAMILIES:
            raise InvalidModelError(f"unknown model family {self.family!r}")
        object.__setattr__(self, "family", fam)
        params = {_PARAM_ALIASES.get(k, k): float(v) for k, v in dict(self.params).items()}
        expected = FAMILIES[fam]
        unknown = set(params) - set(expected)
        if unknown:
            raise InvalidModelError(f"{fam}: unknown parameters {sorted(unknown)}")
        for name in expected:
            params.setdefault(name, 0.0)
            if not math.isfinite(params[name]):
                raise InvalidModelError(f"{fam}: parameter {name} must be finite")
        object.__setattr__(self, "params", params)
        if int(self.n_sites) != self.n_sites or self.n_sites < 3:
            raise InvalidModelError("n_sites must be an integer >= 3")
        object.__setattr__(self, "n_sites", int(self.n_sites))
        if fam in ("ssh", "sshxy") and self.n_sites % 2:
            raise InvalidModelError(f"{fam} needs an even number of sites (two-site unit cell)")

    @property
    def boundary(self) -> str:
        return "periodic"

    def replace(self, **params) -> "ModelSpec":
        merged = dict(self.params)
        merged.update({_PARAM_ALIASES.get(k, k): v for k, v in params.items()})
        return ModelSpec(self.family, self.n_sites, merged)

    @property
    def translation_period(self) -> int:
        return 2 if self.family in ("ssh", "sshxy") else 1

    @property
    def reflection_symmetric(self) -> bool:
        """True when reflection about any site maps H onto itself."""
        return self.family in ("xxz", "xymi")


class BasisMap:
    """Ascending list of basis bitmasks for a sector plus the inverse lookup."""

    def __init__(self, n_sites: int, states: np.ndarray):
        self.n_sites = n_sites
        self.states = np.asarray(states, dtype=np.int64)
        if self.states.size > 1 and np.any(np.diff(self.states) <= 0):
            raise ValueError("basis states must be strictly ascending")

    @classmethod
    def full(cls, n_sites: int) -> "BasisMap":
        return cls(n_sites, np.arange(1 << n_sites, dtype=np.int64))

    @classmethod
    def sz_sector(cls, n_sites: int, sz: float) -> "BasisMap":
        n_up = sz + n_sites / 2
        if abs(n_up - round(n_up)) > 1e-12 or not 0 <= round(n_up) <= n_sites:
            raise UnsupportedSectorError(f"S_z = {sz} is not a valid sector for N = {n_sites}")
        n_up = int(round(n_up))
        all_states = np.arange(1 << n_sites, dtype=np.int64)
        return cls(n_sites, all_states[popcount(all_states) == n_up])

    def __len__(self) -> int:
        return len(self.states)

    def index(self, masks) -> np.ndarray:
        """Sector index of each bitmask; -1 where the mask is not in the sector."""
        masks = np.asarray(masks, dtype=np.int64)
        pos = np.searchsorted(self.states, masks)
        pos = np.clip(pos, 0, len(self.states) - 1)
        return np.where(self.states[pos] == masks, pos, -1)

    @property
    def is_full(self) -> bool:
        return len(self.states) == 1 << self.n_sites


def popcount(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    count = np.zeros_like(x)
    while np.any(x):
        count += x & 1
        x = x >> 1
    return count


@dataclass(frozen=True)
class SparseHamiltonian:
    """Finalized Hamiltonian: row-sorted CSR storage over a basis.

    ``sector`` is the total S^z eigenvalue when the basis is a sector, else None.
    """

    matrix: sp.csr_matrix
    basis: BasisMap
    sector: float | None = None
    spec: ModelSpec | None = None

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def entries(self) -> list[tuple[int, int, complex]]:
        coo = self.matrix.tocoo()
        return list(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def __matmul__(self, v):
        return apply(self, v)


def pauli_string_action(states: np.ndarray, ops: Sequence[tuple[int, str]]):
    """Act with a product of Pauli operators on computational basis states.

    ``ops`` holds (site, 'x'|'y'|'z') with 1-based distinct sites. Returns the
    image bitmasks and the amplitudes <image| P |state>.
    """
    states = np.asarray(states, dtype=np.int64)
    amp = np.ones(states.shape, dtype=complex)
    flip = 0
    for site, op in ops:
        bit = (states >> (site - 1)) & 1
        s = 2 * bit - 1
        if op == "x":
            flip ^= 1 << (site - 1)
        elif op == "y":
            flip ^= 1 << (site - 1)
            amp = amp * (1j * s)
        elif op == "z":
            amp = amp * s
        else:
            raise ValueError(f"unknown Pauli {op!r}")
    return states ^ flip, amp


def model_terms(spec: ModelSpec) -> list[tuple[float, tuple[tuple[int, str], ...]]]:
    """Expand a model into (coefficient, Pauli string) terms with PBC wraparound."""
    n = spec.n_sites
    p = spec.params

    def site(j):
        return (j - 1) % n + 1

    terms = []
    if spec.family == "xxz":
        for j in range(1, n + 1):
            a, b = j, site(j + 1)
            terms += [(1.0, ((a, "x"), (b, "x"))), (1.0, ((a, "y"), (b, "y"))),
                      (p["delta"], ((a, "z"), (b, "z")))]
    elif spec.family == "ssh":
        eta = p["eta"]
        for j in range(1, n + 1):
            a, b = j, site(j + 1)
            t = (1 + eta) / 2 if j % 2 == 1 else (1 - eta) / 2
            terms += [(-t, ((a, "x"), (b, "x"))), (-t, ((a, "y"), (b, "y")))]
    elif spec.family == "sshxy":
        g1, g2 = p["gamma1"], p["gamma2"]
        for j in range(1, n + 1):
            a, b = j, site(j + 1)
            g = g1 if j % 2 == 1 else g2
            terms += [(-(1 + g) / 2, ((a, "x"), (b, "x"))), (-(1 - g) / 2, ((a, "y"), (b, "y")))]
    elif spec.family == "xymi":
        g, lam, alpha, beta = p["gamma"], p["lambda"], p["alpha"], p["beta"]
        for j in range(1, n + 1):
            jm, j1, j2 = site(j - 1), site(j + 1), site(j + 2)
            terms += [(-(1 + g) / 2, ((j, "x"), (j1, "x"))),
                      (-(1 - g) / 2, ((j, "y"), (j1, "y"))),
                      (-lam, ((j, "z"),))]
            if alpha:
                terms += [(-alpha, ((jm, "x"), (j, "z"), (j1, "x"))),
                          (-alpha, ((jm, "y"), (j, "z"), (j1, "y")))]
            if beta:
                terms += [(-beta, ((jm, "x"), (j, "z"), (j1, "z"), (j2, "x"))),
                          (-beta, ((jm, "y"), (j, "z"), (j1, "z"), (j2, "y")))]
    return [(c, ops) for c, ops in terms if c != 0.0]


def build_hamiltonian(spec: ModelSpec, sector: float | None = None) -> SparseHamiltonian:
    """Assemble the Hamiltonian of ``spec`` in the full space or an S^z sector."""
    if sector is not None and spec.family not in SZ_CONSERVING:
        raise UnsupportedSectorError(f"{spec.family} does not conserve total S_z")
    n = spec.n_sites
    basis = BasisMap.full(n) if sector is None else BasisMap.sz_sector(n, sector)
    cols = np.arange(len(basis), dtype=np.int64)

    rows_all, cols_all, vals_all = [], [], []
    for coef, ops in model_terms(spec):
        image, amp = pauli_string_action(basis.states, ops)
        rows_all.append(image)
        cols_all.append(cols)
        vals_all.append(coef * amp)
    if not rows_all:
        matrix = sp.csr_matrix((len(basis), len(basis)))
        return SparseHamiltonian(matrix, basis, sector, spec)

    row_masks = np.concatenate(rows_all)
    col_idx = np.concatenate(cols_all)
    vals = np.concatenate(vals_all)
    # rows are still bitmasks here; sum duplicates before mapping into the sector
    big = sp.coo_matrix((vals, (row_masks, col_idx)), shape=(1 << n, len(basis))).tocsr()
    big.sum_duplicates()
    big.data[np.abs(big.data) < 1e-14] = 0
    big.eliminate_zeros()
    if not basis.is_full:
        occupied = np.unique(big.nonzero()[0])
        if np.any(basis.index(occupied) < 0):
            raise UnsupportedSectorError("Hamiltonian leaks out of the requested sector")
        big = big[basis.states]
    if np.abs(big.data.imag).max(initial=0.0) < 1e-14:
        big = big.real.tocsr()
    big.sort_indices()
    return SparseHamiltonian(big, basis, sector, spec)


def apply(h: SparseHamiltonian, v) -> np.ndarray:
    """Return H v."""
    v = np.asarray(v)
    if v.shape[0] != h.dim:
        raise ValueError(f"vector length {v.shape[0]} does not match dimension {h.dim}")
    return h.matrix @ v


def translation_permutation(n_sites: int, shift: int = 1) -> np.ndarray:
    """Index map of the cyclic translation j -> j + shift on full-space bitmasks."""
    states = np.arange(1 << n_sites, dtype=np.int64)
    mask = (1 << n_sites) - 1
    shift %= n_sites
    return ((states << shift) | (states >> (n_sites - shift))) & mask
