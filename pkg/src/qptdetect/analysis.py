"""Parameter sweeps, derivatives, extremum detection, scaling fits, phase diagrams."""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import ndimage, signal

from qptdetect import freefermion as ff
from qptdetect.eigensolver import ground_state
from qptdetect.errors import InsufficientDataError, QptError
from qptdetect.hilbert import SZ_CONSERVING, ModelSpec, build_hamiltonian
from qptdetect.measures import (
    DiscordConfig,
    TauConfig,
    eof,
    pair_eofs,
    quantum_discord,
    vn_entropy,
)
from qptdetect.rdm import anchor_rdms, rdm1

PAIR_MEASURES = ("eof", "e2v", "qd")
POINT_MEASURES = ("tau_sef", "e1")
MEASURES = POINT_MEASURES + PAIR_MEASURES


@dataclass(frozen=True)
class EvalSettings:
    """What to compute at each parameter point and how."""

    measures: tuple[str, ...] = ("tau_sef",)
    distances: tuple[int, ...] = (1,)
    engine: str = "ed"
    anchor: int = 1
    tau: TauConfig = TauConfig()
    discord: DiscordConfig = DiscordConfig()
    e1_base: float = 2.0
    e2v_base: float = math.e
    sector: str = "auto"
    k_offset: str | float = "auto"
    tol: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        if not self.measures:
            raise ValueError("empty measure set")
        bad = [m for m in self.measures if m not in MEASURES]
        if bad:
            raise ValueError(f"unknown measures {bad}; choose from {MEASURES}")
        if self.engine not in ("ed", "ff"):
            raise ValueError("engine must be 'ed' or 'ff'")
        if any(r < 1 for r in self.distances):
            raise ValueError("pair distances must be >= 1")
        if self.sector not in ("auto", "full", "lowest"):
            try:
                float(self.sector)
            except (TypeError, ValueError):
                raise ValueError("sector must be 'auto', 'full', 'lowest' or an S_z value") from None

    def columns(self) -> list[str]:
        cols = []
        for m in self.measures:
            if m in PAIR_MEASURES:
                cols += [f"{m}_r{r}" for r in self.distances]
            else:
                cols.append(m)
        return cols


@dataclass
class ScanRecord:
    param: str
    value: float
    n_sites: int
    values: dict[str, float]
    degenerate: bool = False
    anchor: int = 1
    wall_time: float = 0.0
    error: str | None = None
    meta: dict = field(default_factory=dict)


def _ed_sector(spec: ModelSpec, policy: str):
    if policy == "full":
        return None
    if policy == "auto":
        return 0.0 if spec.family in SZ_CONSERVING and spec.n_sites % 2 == 0 else None
    return float(policy)


def _lowest_sector_state(spec: ModelSpec, st: EvalSettings):
    """Ground state over all S_z >= 0 sectors (both families are spin-flip symmetric).

    Sectors whose energies tie within the degeneracy tolerance resolve to
    the smallest |S_z|, and the tie marks the point as degenerate. A
    nonzero S_z winner is degenerate with its spin-flipped partner too.
    """
    if spec.family not in SZ_CONSERVING:
        return ground_state(build_hamiltonian(spec, None), st.tol, st.seed)
    n = spec.n_sites
    sectors = [k / 2 for k in range(n % 2, n + 1, 2)]
    states = [ground_state(build_hamiltonian(spec, sz), st.tol, st.seed) for sz in sectors]
    energies = np.array([g.energy for g in states])
    e0 = energies.min()
    tied = np.flatnonzero(energies - e0 <= 1e-8 * max(1.0, abs(e0)))
    best = states[int(tied[0])]
    if tied.size > 1 or sectors[int(tied[0])] != 0:
        best.degenerate = True
    return best


def evaluate_ed(spec: ModelSpec, st: EvalSettings) -> tuple[dict[str, float], dict]:
    if st.sector == "lowest":
        gs = _lowest_sector_state(spec, st)
    else:
        gs = ground_state(build_hamiltonian(spec, _ed_sector(spec, st.sector)), st.tol, st.seed)
    n = spec.n_sites
    anchor = st.anchor
    out: dict[str, float] = {}
    need_e1 = "e1" in st.measures or "tau_sef" in st.measures
    e1 = None
    if need_e1:
        e1 = vn_entropy(rdm1(gs, anchor), base=st.e1_base)
    pair_sites = sorted({(anchor - 1 + r) % n + 1 for r in st.distances})
    rhos = {m.j: m for m in anchor_rdms(gs, anchor, pair_sites)}
    for m in st.measures:
        if m == "tau_sef":
            cfg = st.tau
            pe = pair_eofs(gs, anchor, spec.reflection_symmetric, cfg.r_max)
            out["tau_sef"] = e1 ** 2 - sum(v ** 2 for v in pe.values())
        elif m == "e1":
            out["e1"] = e1
        else:
            for r in st.distances:
                rho = rhos[(anchor - 1 + r) % n + 1]
                out[f"{m}_r{r}"] = _pair_value(m, rho, st)
    meta = {"energy": gs.energy, "gap": gs.gap, "degenerate": gs.degenerate,
            "sector": gs.sector}
    return out, meta


def _pair_value(m: str, rho, st: EvalSettings) -> float:
    if m == "eof":
        return eof(rho)
    if m == "e2v":
        return vn_entropy(rho, base=st.e2v_base)
    return quantum_discord(rho, st.discord)


def evaluate_ff(spec: ModelSpec, st: EvalSettings) -> tuple[dict[str, float], dict]:
    if spec.family != "xymi":
        raise ValueError("the free-fermion engine only covers the xymi family")
    p = spec.params
    ch = ff.chain(p["gamma"], p["lambda"], p["alpha"], p["beta"], spec.n_sites, st.k_offset)
    out: dict[str, float] = {}
    for m in st.measures:
        if m == "tau_sef":
            out["tau_sef"] = ff.tau_sef_details(ch, st.tau, st.e1_base)["tau_sef"]
        elif m == "e1":
            out["e1"] = ff.one_vs_rest_ff(ch, st.e1_base)
        else:
            for r in st.distances:
                out[f"{m}_r{r}"] = _pair_value(m, ch.rdm2(r), st)
    meta = {"energy": ch.energy, "k_offset": ch.p.k_offset, "n_gapless": ch.n_gapless,
            "degenerate": False}
    return out, meta


def evaluate_point(spec: ModelSpec, st: EvalSettings) -> ScanRecord:
    """Evaluate one parameter point; failures become an error-marked record."""
    t0 = time.perf_counter()
    try:
        fn = evaluate_ed if st.engine == "ed" else evaluate_ff
        values, meta = fn(spec, st)
        err = None
    except QptError as exc:
        values = {c: float("nan") for c in st.columns()}
        meta, err = {"degenerate": False}, f"{type(exc).__name__}: {exc}"
    return ScanRecord("", float("nan"), spec.n_sites, values, bool(meta.get("degenerate")),
                      st.anchor, time.perf_counter() - t0, err, meta)


def grid_values(lo: float, hi: float, step: float, offset: float = 0.0) -> np.ndarray:
    """Inclusive uniform grid lo, lo+step, ..., hi (shifted by ``offset``)."""
    if step <= 0:
        raise ValueError("grid step must be positive")
    if hi < lo:
        raise ValueError("grid upper bound below lower bound")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    # round to the step's decimal resolution so CSV output is stable
    vals = lo + offset + step * np.arange(n)
    return np.round(vals, 12)


def default_workers() -> int:
    env = os.environ.get("QPT_THREADS")
    if env:
        n = int(env)
        if n < 1:
            raise ValueError("QPT_THREADS must be a positive integer")
        return n
    return os.cpu_count() or 1


def _run_point(args):
    spec, param, value, st = args
    rec = evaluate_point(spec, st)
    rec.param, rec.value = param, float(value)
    return rec


def scan(template: ModelSpec, param: str, grid: Sequence[float], settings: EvalSettings,
         workers: int | None = None,
         on_record: Callable[[int, ScanRecord], None] | None = None) -> list[ScanRecord]:
    """Evaluate ``settings`` at every grid value of ``param``.

    Records come back in grid order whatever the execution order; per-point
    solver failures are recorded (``error`` set, NaN values) and do not abort
    the scan. ``on_record`` is called in grid order as records complete.
    """
    grid = [float(v) for v in grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("scan grid must be strictly ascending")
    if settings.engine == "ff" and template.family != "xymi":
        raise ValueError("engine 'ff' is only available for the xymi family")
    jobs = [(template.replace(**{param: v}), param, v, settings) for v in grid]
    workers = default_workers() if workers is None else workers
    records: list[ScanRecord] = []
    if workers <= 1 or len(jobs) <= 1:
        it = map(_run_point, jobs)
        for i, rec in enumerate(it):
            records.append(rec)
            if on_record:
                on_record(i, rec)
        return records
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for i, rec in enumerate(pool.map(_run_point, jobs)):
            records.append(rec)
            if on_record:
                on_record(i, rec)
    return records


def series(records: Sequence[ScanRecord], measure: str) -> tuple[np.ndarray, np.ndarray]:
    x = np.array([r.value for r in records], dtype=float)
    y = np.array([r.values.get(measure, float("nan")) for r in records], dtype=float)
    return x, y


def derivative(x, y=None, measure: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference derivative on a uniform grid, one-sided at the ends.

    Accepts either arrays ``(x, y)`` or ``(records, measure=...)``.
    """
    if y is None:
        x, y = series(x, measure)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        raise InsufficientDataError("derivative needs at least 3 points")
    h = np.diff(x)
    if np.ptp(h) > 1e-9 * max(1.0, abs(h.mean())):
        raise ValueError("derivative needs a uniform grid")
    return x, np.gradient(y, h.mean())


class Extremum(NamedTuple):
    location: float
    value: float
    kind: str  # "min" | "max" | "jump"


def _vertex(x3, y3):
    (x0, x1, x2), (y0, y1, y2) = x3, y3
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2 ** 2 * (y0 - y1) + x1 ** 2 * (y2 - y0) + x0 ** 2 * (y1 - y2)) / denom
    c = (x1 * x2 * (x1 - x2) * y0 + x2 * x0 * (x2 - x0) * y1 + x0 * x1 * (x0 - x1) * y2) / denom
    if a == 0:
        return x1, y1
    xv = -b / (2 * a)
    return xv, c - b * b / (4 * a)


def _jumps(y: np.ndarray, factor: float, floor: float, window: int | None = None) -> np.ndarray:
    """Flag neighbor differences above ``factor`` times the median difference.

    The median runs over differences above ``floor`` (exactly flat stretches
    would otherwise drive it to zero), either over the whole series or over
    ``window`` pairs on each side.
    """
    d = np.abs(np.diff(y))
    out = np.zeros(d.size, dtype=bool)
    if d.size < 3:
        return out
    live = d > floor
    if window is None:
        if not live.any():
            return out
        return live & (d > factor * np.median(d[live]))
    for i in np.flatnonzero(live):
        lo, hi = max(0, i - window), min(d.size, i + window + 1)
        ref = np.concatenate([d[lo:i], d[i + 1:hi]])
        ref = ref[ref > floor]
        # an isolated step on an otherwise flat stretch counts as a jump
        out[i] = ref.size == 0 or d[i] > factor * np.median(ref)
    return out


def _drop_long_runs(flags: np.ndarray, max_run: int) -> np.ndarray:
    """Unflag runs of more than ``max_run`` consecutive flagged differences."""
    out = flags.copy()
    i = 0
    while i < flags.size:
        if flags[i]:
            j = i
            while j < flags.size and flags[j]:
                j += 1
            if j - i > max_run:
                out[i:j] = False
            i = j
        else:
            i += 1
    return out


def find_extrema(x, y, prominence: float = 0.0, jump_factor: float = 10.0,
                 jump_floor: float = 1e-12, jump_window: int | None = None,
                 jump_run: int | None = 2) -> list[Extremum]:
    """Discrete extrema refined by a three-point parabola, plus jumps.

    A jump is a neighbor difference exceeding ``jump_factor`` times the
    median absolute neighbor difference. Differences below ``jump_floor``
    are left out of the median, and ``jump_window`` restricts it to that
    many pairs on each side instead of the whole series. ``prominence`` is
    relative to the series range and applies to jumps as well: a jump must
    be at least that fraction of the range. A sampled discontinuity spans
    one or two grid cells, so runs of more than ``jump_run`` flagged
    differences are treated as a steep but continuous stretch instead
    (``None`` keeps every run).
    Results are sorted by location.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = np.isfinite(y)
    x, y = x[ok], y[ok]
    out: list[Extremum] = []
    if y.size < 3:
        return out
    scale = max(1.0, float(np.abs(y).max()))
    span = float(np.ptp(y))
    jump_at = _jumps(y, jump_factor, jump_floor * scale, jump_window)
    if prominence > 0:
        jump_at &= np.abs(np.diff(y)) >= prominence * span
    if jump_run is not None:
        jump_at = _drop_long_runs(jump_at, jump_run)
    for i in np.flatnonzero(jump_at):
        out.append(Extremum(0.5 * (x[i] + x[i + 1]), float(y[i + 1] - y[i]), "jump"))
    if span <= jump_floor * scale:
        return out
    prom = prominence * span if prominence > 0 else None
    for sign, kind in ((1.0, "max"), (-1.0, "min")):
        peaks, _ = signal.find_peaks(sign * y, prominence=prom)
        for i in peaks:
            if i == 0 or i == y.size - 1:
                continue
            # extrema next to a jump are artifacts of the discontinuity
            if jump_at[i - 1] or jump_at[min(i, jump_at.size - 1)]:
                continue
            xv, yv = _vertex(x[i - 1:i + 2], y[i - 1:i + 2])
            if not x[i - 1] <= xv <= x[i + 1]:
                xv, yv = x[i], y[i]
            out.append(Extremum(float(xv), float(yv), kind))
    out.sort(key=lambda e: e.location)
    return out


@dataclass
class FssResult:
    points: list[tuple[int, float, float]]
    slope: float
    intercept: float
    residual: float

    @property
    def extrapolated(self) -> float:
        return self.intercept

    def to_dict(self) -> dict:
        return {"points": [{"n_sites": n, "location": loc, "value": v} for n, loc, v in self.points],
                "slope": self.slope, "intercept": self.intercept,
                "residual": self.residual, "extrapolated": self.extrapolated}


def finite_size_scaling(points: Sequence[tuple[int, float, float]]) -> FssResult:
    """Unweighted least-squares line of extremum value against 1/N^2.

    ``points`` are (N, extremum location, extremum value); ``residual`` is the
    root-mean-square deviation from the fitted line.
    """
    pts = sorted((int(n), float(loc), float(v)) for n, loc, v in points)
    if len({p[0] for p in pts}) < 3:
        raise InsufficientDataError("finite-size scaling needs at least 3 distinct sizes")
    inv = np.array([1.0 / p[0] ** 2 for p in pts])
    vals = np.array([p[2] for p in pts])
    a = np.column_stack([inv, np.ones_like(inv)])
    (slope, intercept), *_ = np.linalg.lstsq(a, vals, rcond=None)
    resid = float(np.sqrt(np.mean((a @ [slope, intercept] - vals) ** 2)))
    return FssResult(pts, float(slope), float(intercept), resid)


def extremum_of(x, y, kind: str) -> tuple[float, float]:
    """Global min/max of a sampled curve, refined by a parabola at interior points."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    i = int(np.nanargmin(y) if kind == "min" else np.nanargmax(y))
    if 0 < i < y.size - 1:
        xv, yv = _vertex(x[i - 1:i + 2], y[i - 1:i + 2])
        if x[i - 1] <= xv <= x[i + 1]:
            return float(xv), float(yv)
    return float(x[i]), float(y[i])


@dataclass
class PhaseDiagram:
    x_name: str
    y_name: str
    x: np.ndarray
    y: np.ndarray
    field: np.ndarray  # shape (len(x), len(y)): d tau / d y
    ridges: list[list[tuple[float, float]]]
    # per x: (representative y, lowest y, highest y) of each merged feature cluster
    bands: list[list[tuple[float, float, float]]] = field(default_factory=list)

    def cells(self):
        for i, xv in enumerate(self.x):
            for j, yv in enumerate(self.y):
                yield float(xv), float(yv), float(self.field[i, j])


def chain_ridges(columns: Sequence[Sequence[float]], x: np.ndarray, y_step: float,
                 max_jump: float = 3.0) -> list[list[tuple[float, float]]]:
    """Link per-column feature locations into polylines.

    Each point continues the nearest open line whose last point sits in the
    previous column and lies within ``max_jump`` grid steps; otherwise it
    starts a new line. A new line whose first point lies within
    ``2 * max_jump`` steps of a point in the previous column starts from
    that point, so branches stay attached to their parent ridge. Likewise a
    line left without a continuation ends on the nearest point of the next
    column within ``max_jump`` steps when there is one.
    """
    lines: list[list[tuple[float, float]]] = []
    open_lines: list[int] = []
    for ci, locs in enumerate(columns):
        next_open = []
        taken = set()
        prev_points = [lines[li][-1] for li in open_lines]
        for loc in sorted(locs):
            best, best_d = None, None
            for li in open_lines:
                if li in taken:
                    continue
                dist = abs(lines[li][-1][1] - loc)
                if dist <= max_jump * y_step + 1e-12 and (best_d is None or dist < best_d):
                    best, best_d = li, dist
            if best is None:
                start = [(float(x[ci]), float(loc))]
                # a line born next to an existing one branches off it
                parent = _nearest_parent(prev_points, loc, 2 * max_jump * y_step)
                if parent is not None:
                    start.insert(0, parent)
                lines.append(start)
                best = len(lines) - 1
            else:
                lines[best].append((float(x[ci]), float(loc)))
            taken.add(best)
            next_open.append(best)
        # a line with no continuation that runs into a point of this column
        # ends on it, so merging ridges stay connected
        here = [(float(x[ci]), float(loc)) for loc in locs]
        for li in open_lines:
            if li not in taken:
                end = _nearest_parent(here, lines[li][-1][1], max_jump * y_step)
                if end is not None:
                    lines[li].append(end)
        open_lines = next_open
    return lines


def _nearest_parent(points, loc, reach):
    best, best_d = None, None
    for pt in points:
        d = abs(pt[1] - loc)
        if d <= reach + 1e-12 and (best_d is None or d < best_d):
            best, best_d = pt, d
    return best


def phase_diagram(template: ModelSpec, x_param: str, x_grid: Sequence[float],
                  y_param: str, y_grid: Sequence[float], settings: EvalSettings | None = None,
                  prominence: float = 0.05, max_jump: float = 3.0,
                  workers: int | None = None) -> PhaseDiagram:
    """d tau_SEF / d y over a rectangular grid, with ridge lines chained across x.

    Ridge points per column are the extrema and jumps of the derivative series
    (prominence relative to that column's range).
    """
    settings = settings or EvalSettings(measures=("tau_sef",), engine="ff")
    if "tau_sef" not in settings.measures:
        settings = EvalSettings(**{**settings.__dict__, "measures": ("tau_sef",)})
    x_grid = np.asarray(x_grid, dtype=float)
    y_grid = np.asarray(y_grid, dtype=float)
    fld = np.zeros((x_grid.size, y_grid.size))
    for i, xv in enumerate(x_grid):
        recs = scan(template.replace(**{x_param: xv}), y_param, y_grid, settings, workers)
        _, tau = series(recs, "tau_sef")
        if y_grid.size >= 3:
            fld[i] = derivative(y_grid, tau)[1]
    return diagram_from_field(x_param, y_param, x_grid, y_grid, fld, prominence, max_jump)


def diagram_from_field(x_name: str, y_name: str, x, y, fld: np.ndarray,
                       prominence: float = 0.05, max_jump: float = 3.0) -> PhaseDiagram:
    """Ridge lines and feature bands of an already computed derivative field."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    bands = feature_bands(fld, y, prominence)
    step = float(y[1] - y[0]) if y.size > 1 else 1.0
    ridges = chain_ridges([[b[0] for b in row] for row in bands], x, step, max_jump)
    return PhaseDiagram(x_name, y_name, x, y, fld, ridges, bands)


def ridges_from_field(fld: np.ndarray, x: np.ndarray, y: np.ndarray,
                      prominence: float = 0.05, max_jump: float = 3.0):
    """Ridge lines of a derivative field sampled on ``x`` (rows) by ``y`` (columns)."""
    return diagram_from_field("x", "y", x, y, fld, prominence, max_jump).ridges


def feature_bands(fld: np.ndarray, y: np.ndarray, prominence: float = 0.05):
    """Per row, the merged feature clusters as (representative, lo, hi)."""
    step = float(y[1] - y[0]) if y.size > 1 else 1.0
    out = []
    for row in fld:
        ok = row[np.isfinite(row)]
        if y.size < 3 or ok.size == 0 or np.ptp(ok) < 1e-9:
            out.append([])
            continue
        # every steep cell counts here; runs of them merge into one band below
        locs = sorted(f.location for f in find_extrema(y, row, prominence=prominence, jump_run=None))
        out.append(_merge_close(locs, y, row, 2 * step))
    return out


def _merge_close(locs: list[float], y: np.ndarray, row: np.ndarray,
                 gap: float) -> list[tuple[float, float, float]]:
    """Collapse runs of features closer than ``gap`` into the strongest member.

    A sharp spike in the derivative registers as a cluster of extrema and
    jumps; keeping one point per cluster stops it from spawning parallel
    ridge fragments. The cluster's extent is returned alongside the kept
    point as (kept, lo, hi).
    """
    out: list[tuple[float, float, float]] = []
    group: list[float] = []

    def flush():
        if group:
            mags = [abs(row[int(np.argmin(np.abs(y - g)))]) for g in group]
            out.append((group[int(np.argmax(mags))], group[0], group[-1]))

    for loc in locs:
        if group and loc - group[-1] > gap + 1e-12:
            flush()
            group = []
        group.append(loc)
    flush()
    return out


def ridge_mask(diagram: PhaseDiagram, min_length: int = 1) -> np.ndarray:
    """Boolean grid marking ridge cells.

    Consecutive ridge points are joined vertically so every ridge forms a
    connected barrier, and the full extent of each feature cluster on a kept
    ridge is marked, so ridges that run together form one solid wall.
    """
    mask = np.zeros(diagram.field.shape, dtype=bool)
    y = diagram.y
    kept = set()
    for line in diagram.ridges:
        if len(line) < min_length:
            continue
        prev = None
        for xv, yv in line:
            i = int(np.argmin(np.abs(diagram.x - xv)))
            j = int(np.argmin(np.abs(y - yv)))
            mask[i, j] = True
            kept.add((i, j))
            if prev is not None and prev[0] == i - 1:
                lo, hi = sorted((prev[1], j))
                mask[i, lo:hi + 1] = True
            prev = (i, j)
    for i, row in enumerate(diagram.bands):
        for rep, lo, hi in row:
            if (i, int(np.argmin(np.abs(y - rep)))) in kept:
                mask[i, int(np.argmin(np.abs(y - lo))):int(np.argmin(np.abs(y - hi))) + 1] = True
    return mask


def count_regions(diagram: PhaseDiagram, min_length: int = 3, min_cells: int = 4) -> int:
    """Number of connected non-ridge regions (4-connectivity) of the grid."""
    mask = ridge_mask(diagram, min_length)
    labels, n = ndimage.label(~mask)
    if n == 0:
        return 0
    sizes = ndimage.sum(np.ones_like(labels), labels, index=np.arange(1, n + 1))
    return int(np.sum(sizes >= min_cells))


def ridge_counts(diagram: PhaseDiagram, min_length: int = 10) -> np.ndarray:
    """Distinct ridge points per x column, counting lines of at least ``min_length``.

    A ridge split into chained fragments shares its junction point, so it
    counts once.
    """
    counts = np.zeros(diagram.x.size, dtype=int)
    for i, xv in enumerate(diagram.x):
        pts = set()
        for line in diagram.ridges:
            if len(line) >= min_length:
                pts.update(round(b, 9) for a, b in line if abs(a - xv) < 1e-9)
        counts[i] = len(pts)
    return counts


def ridge_onsets(diagram: PhaseDiagram, min_length: int = 10, persist: int = 5) -> list[float]:
    """x values where the ridge count rises and holds for ``persist`` columns."""
    counts = ridge_counts(diagram, min_length)
    out = []
    for i in range(1, counts.size - persist + 1):
        if counts[i] > counts[i - 1] and np.all(counts[i:i + persist] >= counts[i]):
            out.append(float(diagram.x[i]))
    return out

