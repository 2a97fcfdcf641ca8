"""Free-fermion solution of the XY chain with three- and four-spin interactions.

    H = -sum_j [ (1+g)/2 XX + (1-g)/2 YY + lam Z
                 + alpha (X Z X + Y Z Y) + beta (X Z Z X + Y Z Z Y) ]

After Jordan-Wigner, Fourier and Bogoliubov transformations the
quasiparticle energies are ``2 * eps_k`` with

    eps_k   = sqrt(e_k^2 + (g sin x_k)^2)
    e_k     = lam - cos x_k - 2 alpha cos 2x_k - 2 beta cos 3x_k
    x_k     = 2 pi (k + k_offset) / N,   k = 1..N

Two-point spin correlators follow from the coefficients

    a_r = -(1/N) sum_k [cos(x_k r) e_k + g sin(x_k r) sin x_k] / eps_k

through Toeplitz determinants, and the two-site reduced density matrix has
the X form fixed by <sz>, <sx sx>, <sy sy>, <sz sz>.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from qptdetect.errors import NumericalIntegrityError
from qptdetect.measures import (
    DiscordConfig,
    TauConfig,
    binary_entropy,
    eof,
    quantum_discord,
    vn_entropy,
)
from qptdetect.rdm import Rdm2, check_density_matrix

GAPLESS_EPS = 1e-14


@dataclass(frozen=True)
class FfParams:
    gamma: float
    lam: float
    alpha: float
    beta: float
    n_sites: int
    k_offset: float = 0.0

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 3 or self.n_sites % 2 == 0:
            raise ValueError("free-fermion engine needs an odd n_sites >= 3")
        if self.k_offset not in (0.0, 0.5):
            raise ValueError("k_offset must be 0 or 1/2")
        for name in ("gamma", "lam", "alpha", "beta"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def with_offset(self, k_offset: float) -> "FfParams":
        return replace(self, k_offset=k_offset)


def momenta(p: FfParams) -> np.ndarray:
    k = np.arange(1, p.n_sites + 1)
    return 2 * np.pi * (k + p.k_offset) / p.n_sites


def _spectrum(p: FfParams, x: np.ndarray):
    e = p.lam - np.cos(x) - 2 * p.alpha * np.cos(2 * x) - 2 * p.beta * np.cos(3 * x)
    d = p.gamma * np.sin(x)
    return e, np.hypot(e, d), d


def dispersion(p: FfParams, k) -> tuple[float, float]:
    """(e_k, eps_k) at grid index ``k`` (1..N)."""
    x = 2 * np.pi * (k + p.k_offset) / p.n_sites
    e, eps, _ = _spectrum(p, np.asarray(x, dtype=float))
    return float(e), float(eps)


def _unpaired_index(p: FfParams) -> int:
    """Grid position of the self-conjugate mode: x = 0 (integer grid) or x = pi."""
    if p.k_offset == 0.0:
        return p.n_sites - 1
    return (p.n_sites - 1) // 2 - 1


def ground_energy(p: FfParams, parity_fix: bool = True) -> float:
    """Energy of the lowest grid state, -sum_k eps_k for the bare vacuum.

    With ``parity_fix`` the self-conjugate mode is pinned to the occupation
    that makes the state's fermion parity consistent with the grid.
    """
    return FreeFermionChain(p, parity_fix).energy


class FreeFermionChain:
    """Per-parameter-point cache of the momentum sums.

    Gapless grid points (eps_k < 1e-14) use sign(e_k) with sign(0) = 0 for the
    ratio e_k/eps_k and 0 for (g sin x_k)/eps_k; they are counted in
    ``n_gapless``.
    """

    def __init__(self, p: FfParams, parity_fix: bool = True):
        self.p = p
        x = momenta(p)
        e, eps, d = _spectrum(p, x)
        gapless = eps < GAPLESS_EPS
        safe = np.where(gapless, 1.0, eps)
        ratio = np.where(gapless, np.sign(e), e / safe)
        self.unpaired = _unpaired_index(p)
        if parity_fix:
            # the unpaired mode's occupation fixes the fermion parity of the grid:
            # filled (ratio -1) on the integer grid, empty (+1) on the half-integer one
            ratio[self.unpaired] = -1.0 if p.k_offset == 0.0 else 1.0
        self.x = x
        self.ratio = ratio
        self.dratio = np.where(gapless, 0.0, d / safe)
        self.dratio[self.unpaired] = 0.0
        self.n_gapless = int(gapless.sum())
        self.energy = float(-np.sum(np.where(np.arange(p.n_sites) == self.unpaired, e * ratio, eps)))
        self._a: dict[int, float] = {}

    @cached_property
    def magnetization(self) -> float:
        return float(self.ratio.mean())

    def a(self, r: int) -> float:
        if r not in self._a:
            self.table(abs(r))
        return self._a[r]

    def table(self, r_max: int) -> dict[int, float]:
        """a_r for r in [-r_max, r_max], computed in one vectorized pass."""
        missing = [r for r in range(-r_max, r_max + 1) if r not in self._a]
        if missing:
            rs = np.asarray(missing, dtype=float)
            xr = np.outer(rs, self.x)
            vals = -(np.cos(xr) @ self.ratio + np.sin(xr) @ self.dratio) / self.p.n_sites
            self._a.update(zip(missing, vals.tolist()))
        return {r: self._a[r] for r in range(-r_max, r_max + 1)}

    def xx(self, r: int) -> float:
        # entry (i, j) = a_{i-j-1}
        return _det(self._toeplitz(r, -1))

    def yy(self, r: int) -> float:
        # entry (i, j) = a_{i-j+1}
        return _det(self._toeplitz(r, +1))

    def zz(self, r: int) -> float:
        return self.magnetization ** 2 - self.a(r) * self.a(-r)

    def _toeplitz(self, r: int, shift: int) -> np.ndarray:
        if r < 1:
            raise ValueError("correlator distance must be >= 1")
        tab = self.table(r + 1)
        vals = np.array([tab[k] for k in range(-r - 1, r + 2)])
        idx = np.subtract.outer(np.arange(r), np.arange(r)) + shift
        return vals[idx + r + 1]

    def correlators(self, r: int) -> tuple[float, float, float]:
        return self.xx(r), self.yy(r), self.zz(r)

    def rdm2(self, r: int) -> Rdm2:
        sz = self.magnetization
        xx, yy, zz = self.correlators(r)
        return Rdm2(x_form_rdm(sz, xx, yy, zz), 1, 1 + r)

    def rdm1(self) -> np.ndarray:
        sz = self.magnetization
        return np.diag([(1 + sz) / 2, (1 - sz) / 2])


def _det(m: np.ndarray) -> float:
    # LU with partial pivoting, accumulated as sign * exp(log|det|)
    sign, logdet = np.linalg.slogdet(m)
    if sign == 0:
        return 0.0
    if not np.isfinite(logdet) or logdet > 700:
        raise NumericalIntegrityError(f"Toeplitz determinant out of range (log|det| = {logdet})")
    if logdet < -745:
        return 0.0
    return float(sign * math.exp(logdet))


def x_form_rdm(sz: float, xx: float, yy: float, zz: float, tol: float = 1e-8) -> np.ndarray:
    """Two-site X-form density matrix from translation-invariant correlators.

    Eigenvalues in [-tol, 0) are clipped to zero and the trace renormalized;
    anything more negative raises NumericalIntegrityError.
    """
    u_p = (1 + 2 * sz + zz) / 4
    u_m = (1 - 2 * sz + zz) / 4
    z = (1 - zz) / 4
    y_p = (xx + yy) / 4
    y_m = (xx - yy) / 4
    rho = np.array([[u_p, 0, 0, y_m],
                    [0, z, y_p, 0],
                    [0, y_p, z, 0],
                    [y_m, 0, 0, u_m]], dtype=float)
    w, v = np.linalg.eigh(rho)
    if w.min() < -tol:
        raise NumericalIntegrityError(f"X-form RDM has eigenvalue {w.min():.3e}")
    if w.min() < 0:
        w = np.clip(w, 0.0, None)
        rho = (v * w) @ v.T
        rho /= np.trace(rho)
    check_density_matrix(rho, tol=tol)
    return rho


def auto_offset(p: FfParams, parity_fix: bool = True) -> float:
    """Momentum grid offset (0 or 1/2) whose physical lowest state has lower energy.

    Ties go to the integer grid.
    """
    e0 = ground_energy(p.with_offset(0.0), parity_fix)
    e1 = ground_energy(p.with_offset(0.5), parity_fix)
    return 0.5 if e1 < e0 - 1e-12 * max(1.0, abs(e0)) else 0.0


def chain(gamma, lam, alpha, beta, n_sites, k_offset="auto") -> FreeFermionChain:
    p = FfParams(float(gamma), float(lam), float(alpha), float(beta), int(n_sites))
    off = auto_offset(p) if k_offset == "auto" else float(k_offset)
    return FreeFermionChain(p.with_offset(off))


# module-level conveniences mirroring the per-point cache


def magnetization(p: FfParams) -> float:
    return FreeFermionChain(p).magnetization


def a_coeff(p: FfParams, r: int) -> float:
    return FreeFermionChain(p).a(r)


def correlators(p: FfParams, r: int) -> tuple[float, float, float]:
    return FreeFermionChain(p).correlators(r)


def rdm2_ff(p: FfParams, r: int) -> Rdm2:
    return FreeFermionChain(p).rdm2(r)


def one_vs_rest_ff(ch: FreeFermionChain, base: float = 2) -> float:
    x = (1 + ch.magnetization) / 2
    h = binary_entropy(x)
    return h if base == 2 else h * math.log(2) / math.log(base)


def tau_sef_ff(p_or_chain, cfg: TauConfig = TauConfig(r_max=50, tail_tol=1e-14), e1_base: float = 2) -> float:
    """Residual entanglement on the ring from the analytic correlators.

    tau = E1^2 - 2 sum_{r=1}^{r_stop} EOF(r)^2 with r_stop = min(r_max, (N-1)/2),
    stopping earlier once ``cfg.patience`` consecutive increments fall below
    ``cfg.tail_tol``.
    """
    ch = p_or_chain if isinstance(p_or_chain, FreeFermionChain) else FreeFermionChain(p_or_chain)
    return tau_sef_details(ch, cfg, e1_base)["tau_sef"]


def tau_sef_details(ch: FreeFermionChain, cfg: TauConfig, e1_base: float = 2) -> dict:
    n = ch.p.n_sites
    r_stop = (n - 1) // 2 if cfg.r_max is None else min(cfg.r_max, (n - 1) // 2)
    e1 = one_vs_rest_ff(ch, e1_base)
    total = 0.0
    small = 0
    eofs = []
    for r in range(1, r_stop + 1):
        inc = eof(ch.rdm2(r)) ** 2
        eofs.append(math.sqrt(inc))
        total += inc
        small = small + 1 if inc < cfg.tail_tol else 0
        if cfg.tail_tol > 0 and small >= cfg.patience:
            break
    return {"tau_sef": e1 ** 2 - 2 * total, "e1": e1, "eof": eofs, "r_used": len(eofs)}


def pair_measures_ff(ch: FreeFermionChain, r: int, discord: DiscordConfig | None = None) -> dict:
    rho = ch.rdm2(r)
    out = {"eof": eof(rho), "e2v": vn_entropy(rho, base=math.e)}
    if discord is not None:
        out["qd"] = quantum_discord(rho, discord)
    return out
