"""Two-site entanglement/correlation detectors and residual entanglement.

All pair measures take a 4x4 density matrix (or an :class:`~qptdetect.rdm.Rdm2`)
in the (uu, ud, du, dd) ordering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from qptdetect.errors import NumericalIntegrityError
from qptdetect.rdm import anchor_rdms, rdm1

SY_SY = np.array([[0, 0, 0, -1],
                  [0, 0, 1, 0],
                  [0, 1, 0, 0],
                  [-1, 0, 0, 0]], dtype=float)


def _mat(rho) -> np.ndarray:
    return np.asarray(getattr(rho, "matrix", rho))


def _log(x, base):
    return np.log(x) / math.log(base) if base != math.e else np.log(x)


def concurrence(rho) -> float:
    """Wootters concurrence max(0, l1 - l2 - l3 - l4).

    The l_n are square roots of the eigenvalues of rho * rho_tilde with
    rho_tilde = (sy x sy) rho* (sy x sy).
    """
    rho = _mat(rho)
    rho = (rho + rho.conj().T) / 2
    rho_tilde = SY_SY @ rho.conj() @ SY_SY
    # sqrt(rho) rho_tilde sqrt(rho) is Hermitian with the spectrum of rho rho_tilde;
    # eigvals of the non-normal product can be off by sqrt(eps) near Jordan blocks
    w, u = np.linalg.eigh(rho)
    sq = (u * np.sqrt(np.clip(w, 0.0, None))) @ u.conj().T
    ev = np.linalg.eigvalsh(sq @ rho_tilde @ sq)
    # eigenvalues within roundoff of zero are zero; their square roots would
    # otherwise contribute sqrt(eps) ~ 1e-8 each
    noise = 64 * np.finfo(float).eps * max(1.0, float(np.abs(ev).max()))
    ev = np.where(ev < -1e-12, ev, np.where(ev < noise, 0.0, ev))
    if np.any(ev < 0):
        raise NumericalIntegrityError(f"rho*rho_tilde has eigenvalue {ev.min():.2e}")
    lam = np.sort(np.sqrt(ev))[::-1]
    c = lam[0] - lam[1] - lam[2] - lam[3]
    return float(min(1.0, max(0.0, c)))


def binary_entropy(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return float(-x * math.log2(x) - (1 - x) * math.log2(1 - x))


def eof_from_concurrence(c: float) -> float:
    c = min(1.0, max(0.0, float(c)))
    x = (1 + math.sqrt(1 - c * c)) / 2
    return binary_entropy(x)


def eof(rho) -> float:
    """Entanglement of formation in bits."""
    return eof_from_concurrence(concurrence(rho))


def vn_entropy(rho, base: float = 2) -> float:
    """von Neumann entropy; eigenvalues below 1e-14 contribute nothing."""
    rho = _mat(rho)
    w = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    w = w[w > 1e-14]
    return float(max(0.0, -np.sum(w * _log(w, base))))


def one_vs_rest(state, site: int = 1) -> float:
    """Entanglement (bits) between one site and the rest of a pure state."""
    return vn_entropy(rdm1(state, site), base=2)


@dataclass(frozen=True)
class DiscordConfig:
    """Projective-measurement minimizer settings.

    The conditional entropy is first scanned on an ``n_theta x n_phi`` grid
    over theta in [0, pi/2], phi in [0, 2 pi); the best ``n_starts`` coarse
    local minima are then refined on local grids whose half-width shrinks by
    ``shrink`` per level.
    """

    n_theta: int = 64
    n_phi: int = 128
    levels: int = 6
    shrink: float = 5.0
    tol: float = 1e-10
    base: float = 2
    measured_slot: int = 2
    # "measured": E1 of the measured qubit (as printed); "unmeasured": the other one
    marginal: str = "measured"
    phi_offset: float = 0.0
    n_starts: int = 4

    def __post_init__(self):
        if self.n_theta < 16 or self.n_phi < 16:
            raise ValueError("discord grid needs n_theta, n_phi >= 16")
        if self.tol <= 0:
            raise ValueError("discord tolerance must be positive")
        if self.measured_slot not in (1, 2):
            raise ValueError("measured_slot must be 1 or 2")
        if self.marginal not in ("measured", "unmeasured"):
            raise ValueError("marginal must be 'measured' or 'unmeasured'")
        if self.shrink <= 1:
            raise ValueError("shrink factor must exceed 1")


def _swap_slots(rho: np.ndarray) -> np.ndarray:
    return rho.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)


def conditional_entropy(rho, theta, phi, base: float = 2) -> np.ndarray:
    """sum_k p_k S(rho_k) after measuring slot 2 in the basis V(theta, phi).

    Vectorized over broadcastable ``theta``/``phi`` arrays.
    """
    r = _mat(rho).reshape(2, 2, 2, 2)
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    e = np.exp(1j * phi)
    c, s, e = np.broadcast_arrays(c, s, e)
    # columns of V: |v0> = (c, e s), |v1> = (conj(e) s, -c)
    vecs = (np.stack([c, e * s], axis=-1), np.stack([e.conj() * s, -c], axis=-1))
    total = np.zeros(c.shape)
    for v in vecs:
        # m[a, a'] = sum_{b b'} conj(v_b) r[a, b, a', b'] v_b'
        m = np.einsum("...b,abcd,...d->...ac", v.conj(), r, v)
        m00, m11, m01 = m[..., 0, 0].real, m[..., 1, 1].real, m[..., 0, 1]
        p = m00 + m11
        disc = np.sqrt(np.maximum((m00 - m11) ** 2 + 4 * np.abs(m01) ** 2, 0.0))
        for lam in ((p + disc) / 2, (p - disc) / 2):
            ok = lam > 1e-14
            safe = np.where(ok, lam, 1.0)
            total -= np.where(ok, safe * _log(safe, base), 0.0)
        okp = p > 1e-14
        safep = np.where(okp, p, 1.0)
        total += np.where(okp, safep * _log(safep, base), 0.0)
    return total


def _local_minima(f: np.ndarray) -> list[tuple[int, int]]:
    """Coarse-grid local minima (phi periodic), ordered by value then index."""
    up = np.roll(f, 1, axis=1)
    down = np.roll(f, -1, axis=1)
    left = np.vstack([np.full((1, f.shape[1]), np.inf), f[:-1]])
    right = np.vstack([f[1:], np.full((1, f.shape[1]), np.inf)])
    mask = (f <= up) & (f <= down) & (f <= left) & (f <= right)
    idx = np.argwhere(mask)
    flat = idx[:, 0] * f.shape[1] + idx[:, 1]
    order = np.lexsort((flat, f[mask]))
    return [tuple(map(int, idx[o])) for o in order]


def minimize_conditional_entropy(rho, cfg: DiscordConfig = DiscordConfig()):
    """Return (min conditional entropy, theta, phi)."""
    rho = _mat(rho)
    if cfg.measured_slot == 1:
        rho = _swap_slots(rho)
    half_pi = math.pi / 2
    thetas = np.linspace(0.0, half_pi, cfg.n_theta)
    phis = cfg.phi_offset + np.arange(cfg.n_phi) * (2 * math.pi / cfg.n_phi)
    f = conditional_entropy(rho, thetas[:, None], phis[None, :], cfg.base)
    if not np.all(np.isfinite(f)):
        raise NumericalIntegrityError("non-finite conditional entropy on the coarse grid")
    dth, dph = thetas[1] - thetas[0], phis[1] - phis[0]
    npts = 2 * int(math.ceil(cfg.shrink)) + 1

    best = (float(f.min()), *np.unravel_index(int(np.argmin(f)), f.shape))
    best = (best[0], float(thetas[best[1]]), float(phis[best[2]]))
    starts = _local_minima(f)[: cfg.n_starts] or [np.unravel_index(int(np.argmin(f)), f.shape)]
    for it, ip in starts:
        val, th0, ph0 = float(f[it, ip]), float(thetas[it]), float(phis[ip])
        wt, wp = dth, dph
        for _ in range(cfg.levels):
            tg = np.clip(np.linspace(th0 - wt, th0 + wt, npts), 0.0, half_pi)
            pg = np.linspace(ph0 - wp, ph0 + wp, npts)
            g = conditional_entropy(rho, tg[:, None], pg[None, :], cfg.base)
            if not np.all(np.isfinite(g)):
                raise NumericalIntegrityError("non-finite conditional entropy during refinement")
            k = np.unravel_index(int(np.argmin(g)), g.shape)
            improvement = val - float(g[k])
            wt, wp = wt / cfg.shrink, wp / cfg.shrink
            if improvement > 0:
                val, th0, ph0 = float(g[k]), float(tg[k[0]]), float(pg[k[1]])
                if improvement < cfg.tol:
                    break
            # an unmoved center still needs the finer grid of the next level
        if val < best[0]:
            best = (val, th0, ph0 % (2 * math.pi))
    return best


def quantum_discord(rho, cfg: DiscordConfig = DiscordConfig()) -> float:
    """Quantum discord with a projective measurement on one qubit of the pair.

    QD = S(marginal) + min_{V} sum_k p_k S(rho_k) - S(rho), all in ``cfg.base``.
    By default the measurement acts on slot 2 and the marginal is that of the
    measured qubit.
    """
    m = _mat(rho)
    if not np.all(np.isfinite(m)):
        raise NumericalIntegrityError("discord input has non-finite entries")
    r = m.reshape(2, 2, 2, 2)
    rho_first = np.einsum("abcb->ac", r)
    rho_second = np.einsum("abad->bd", r)
    measured, unmeasured = (rho_second, rho_first) if cfg.measured_slot == 2 else (rho_first, rho_second)
    marginal = measured if cfg.marginal == "measured" else unmeasured
    cond, _, _ = minimize_conditional_entropy(m, cfg)
    qd = vn_entropy(marginal, cfg.base) + cond - vn_entropy(m, cfg.base)
    if not math.isfinite(qd):
        raise NumericalIntegrityError("non-finite discord")
    if -1e-8 < qd < 0:
        qd = 0.0
    return float(qd)


@dataclass(frozen=True)
class TauConfig:
    """Residual-entanglement settings.

    ``r_max`` bounds the pair distance (None = all pairs). On the free-fermion
    path the distance sum also stops once ``patience`` consecutive EOF^2
    increments fall below ``tail_tol``.
    """

    anchor: int = 1
    r_max: int | None = None
    tail_tol: float = 0.0
    patience: int = 3

    def __post_init__(self):
        if self.r_max is not None and self.r_max < 1:
            raise ValueError("r_max must be >= 1")
        if self.tail_tol < 0:
            raise ValueError("tail tolerance must be >= 0")
        if self.anchor < 1:
            raise ValueError("anchor site is 1-based")


def pair_eofs(state, anchor: int = 1, reflection: bool = False, r_max: int | None = None) -> dict[int, float]:
    """EOF between ``anchor`` and the site at ring distance r, keyed by r = 1..N-1.

    With ``reflection`` the ring partner N - r reuses the value of r.
    """
    n = state.n_sites if hasattr(state, "n_sites") else int(np.asarray(state).size).bit_length() - 1
    rs = list(range(1, n))
    if r_max is not None:
        rs = [r for r in rs if min(r, n - r) <= r_max]
    if reflection:
        todo = [r for r in rs if r <= n - r]
    else:
        todo = rs
    sites = [(anchor - 1 + r) % n + 1 for r in todo]
    vals = {r: eof(m) for r, m in zip(todo, anchor_rdms(state, anchor, sites))}
    if reflection:
        for r in rs:
            if r not in vals:
                vals[r] = vals[n - r]
    return vals


def tau_sef(state, cfg: TauConfig = TauConfig(), reflection: bool = False) -> float:
    """Residual entanglement E1^2 - sum_k EOF(anchor, k)^2 of a pure state (bits^2).

    ``reflection`` may be set when the state is symmetric under reflection
    about the anchor site, which halves the number of pair extractions.
    """
    e1 = one_vs_rest(state, cfg.anchor)
    pairs = pair_eofs(state, cfg.anchor, reflection, cfg.r_max)
    return float(e1 ** 2 - sum(v ** 2 for v in pairs.values()))
