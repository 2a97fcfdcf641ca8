"""Command-line front end: ``qptdetect {scan,fss,phasediag,validate}``.

Configuration precedence is flags > config file (JSON) > defaults; the
effective configuration is echoed into every output. A CSV written by
``scan`` can itself be passed as ``--config`` to replay the run.

Exit codes: 0 success, 1 usage error, 2 numerical-integrity failure,
3 validation failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from contextlib import contextmanager

import numpy as np

from qptdetect import __version__
from qptdetect import freefermion as ff
from qptdetect.analysis import (
    MEASURES,
    EvalSettings,
    ScanRecord,
    count_regions,
    default_workers,
    derivative,
    extremum_of,
    finite_size_scaling,
    find_extrema,
    grid_values,
    phase_diagram,
    ridge_onsets,
    scan,
    series,
)
from qptdetect.eigensolver import ground_state
from qptdetect.errors import (
    ConvergenceError,
    InsufficientDataError,
    InvalidModelError,
    NumericalIntegrityError,
    UnsupportedSectorError,
)
from qptdetect.hilbert import FAMILIES, ModelSpec, build_hamiltonian
from qptdetect.measures import DiscordConfig, TauConfig, tau_sef
from qptdetect.output import (
    ScanCsvWriter,
    fmt_float,
    header_lines,
    read_csv,
    records_to_json,
    scan_columns,
    write_json,
)
from qptdetect.rdm import rdm1, rdm2
from qptdetect.svg import fit_plot, heat_map, line_plot

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_VALIDATION = 0, 1, 2, 3

PARAM_FLAGS = ("delta", "eta", "gamma1", "gamma2", "gamma", "lambda", "alpha", "beta")

# engine-dependent defaults for the residual-entanglement distance sum
TAU_DEFAULTS = {"ed": {"r_max": None, "tail_tol": 0.0, "patience": 3},
                "ff": {"r_max": 50, "tail_tol": 1e-14, "patience": 3}}

SCAN_DEFAULTS = {
    "model": None, "size": None, "params": {}, "param": None, "range": None, "offset": 0.0,
    "engine": "ed", "measures": ["tau_sef"], "distances": [1], "sector": "auto", "anchor": 1,
    "e1_base": 2.0, "e2v_base": math.e, "tau": {}, "discord": {}, "k_offset": "auto",
    "tol": 1e-10, "seed": 0, "workers": None, "out": None, "json": None, "svg": None,
}
PHASE_DEFAULTS = {**SCAN_DEFAULTS, "x_param": None, "x_range": None, "prominence": 0.05,
                  "max_jump": 3.0}
FSS_DEFAULTS = {"inputs": [], "measure": "tau_sef", "kind": "min", "window": None,
                "derivative": False, "json": None, "svg": None}
VALIDATE_DEFAULTS = {"sizes": [7, 9, 11], "draws": 20, "seed": 0, "threshold": 1e-6,
                     "k_offset": "auto", "max_r": 3, "json": None}


class UsageError(Exception):
    """Bad flags, config keys or input files; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --------------------------------------------------------------------- parsing


def parse_range(text: str) -> list[float]:
    parts = str(text).split(":")
    if len(parts) != 3:
        raise UsageError(f"range {text!r} must look like lo:hi:step")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError:
        raise UsageError(f"range {text!r} has a non-numeric field") from None
    if not step > 0 or hi < lo:
        raise UsageError(f"range {text!r} needs step > 0 and hi >= lo")
    return [lo, hi, step]


def parse_base(text) -> float:
    if isinstance(text, (int, float)):
        value = float(text)
    elif str(text).strip().lower() == "e":
        value = math.e
    else:
        try:
            value = float(text)
        except ValueError:
            raise UsageError(f"logarithm base {text!r} is not a number or 'e'") from None
    if not value > 1:
        raise UsageError("logarithm base must exceed 1")
    return value


def _csv_list(text, conv=str):
    if isinstance(text, (list, tuple)):
        return [conv(v) for v in text]
    return [conv(v.strip()) for v in str(text).split(",") if v.strip()]


def _k_offset(text):
    if text in (None, "auto"):
        return "auto"
    try:
        value = float(text)
    except ValueError:
        raise UsageError("k-offset must be 'auto', 0 or 0.5") from None
    if value not in (0.0, 0.5):
        raise UsageError("k-offset must be 'auto', 0 or 0.5")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qptdetect", description="Quantum phase transition detectors on spin chains.")
    p.add_argument("--version", action="version", version=f"qptdetect {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def model_flags(sp):
        sp.add_argument("--config", help="JSON config file or a CSV written by scan (replay)")
        sp.add_argument("--model", help="xxz | ssh | sshxy | xymi")
        sp.add_argument("--size", type=int, help="number of sites N")
        for name in PARAM_FLAGS:
            sp.add_argument(f"--{name}", type=float, dest=f"p_{name}", metavar="X")
        sp.add_argument("--param", help="swept parameter")
        sp.add_argument("--range", help="lo:hi:step")
        sp.add_argument("--offset", type=float, help="shift added to every grid value")
        sp.add_argument("--engine", choices=("ed", "ff"))
        sp.add_argument("--measures", help=f"comma list from {','.join(MEASURES)}")
        sp.add_argument("--distances", help="comma list of pair distances r")
        sp.add_argument("--sector", help="auto | full | lowest | S_z value (ED only)")
        sp.add_argument("--anchor", type=int)
        sp.add_argument("--e1-base", dest="e1_base")
        sp.add_argument("--e2v-base", dest="e2v_base")
        sp.add_argument("--r-max", dest="r_max", help="largest pair distance in tau_sef ('all' for no limit)")
        sp.add_argument("--tail-tol", dest="tail_tol", type=float)
        sp.add_argument("--patience", type=int)
        sp.add_argument("--discord-theta", dest="n_theta", type=int)
        sp.add_argument("--discord-phi", dest="n_phi", type=int)
        sp.add_argument("--discord-levels", dest="levels", type=int)
        sp.add_argument("--discord-shrink", dest="shrink", type=float)
        sp.add_argument("--discord-tol", dest="discord_tol", type=float)
        sp.add_argument("--discord-base", dest="discord_base")
        sp.add_argument("--k-offset", dest="k_offset")
        sp.add_argument("--tol", type=float)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--out", help="CSV output path (stdout when omitted)")
        sp.add_argument("--json", help="JSON report path")
        sp.add_argument("--svg", help="SVG plot path")

    sp = sub.add_parser("scan", help="sweep one parameter and record detectors")
    model_flags(sp)

    sp = sub.add_parser("phasediag", help="d tau_SEF / d y over a two-parameter grid")
    model_flags(sp)
    sp.add_argument("--x-param", dest="x_param")
    sp.add_argument("--x-range", dest="x_range")
    sp.add_argument("--prominence", type=float)
    sp.add_argument("--max-jump", dest="max_jump", type=float)

    sp = sub.add_parser("fss", help="finite-size scaling of an extremum across scan CSVs")
    sp.add_argument("inputs", nargs="*")
    sp.add_argument("--config")
    sp.add_argument("--measure")
    sp.add_argument("--kind", choices=("min", "max"))
    sp.add_argument("--window", help="lo:hi restricting the extremum search")
    sp.add_argument("--derivative", action="store_true", default=None,
                    help="use the extremum of the first derivative instead")
    sp.add_argument("--json")
    sp.add_argument("--svg")

    sp = sub.add_parser("validate", help="free-fermion engine against exact diagonalization")
    sp.add_argument("--config")
    sp.add_argument("--sizes")
    sp.add_argument("--draws", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--threshold", type=float)
    sp.add_argument("--k-offset", dest="k_offset")
    sp.add_argument("--max-r", dest="max_r", type=int)
    sp.add_argument("--json")
    return p


def load_config_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if text.lstrip().startswith("#"):
        for line in text.splitlines():
            if line.startswith("# config:"):
                cfg = json.loads(line.split(":", 1)[1])
                # replay recomputes; output destinations come from the new flags
                for key in OUTPUT_KEYS:
                    cfg.pop(key, None)
                return cfg
        raise UsageError(f"{path} has no '# config:' header line")
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    return cfg


def _merge(defaults: dict, file_cfg: dict, flags: dict) -> dict:
    unknown = sorted(set(file_cfg) - set(defaults) - {"command", "version"})
    if unknown:
        raise UsageError(f"unknown config key {unknown[0]!r}")
    cfg = json.loads(json.dumps(defaults))
    for key, value in file_cfg.items():
        if key in ("command", "version"):
            continue
        if isinstance(cfg.get(key), dict) and isinstance(value, dict):
            cfg[key] = {**cfg[key], **value}
        else:
            cfg[key] = value
    for key, value in flags.items():
        if value is None:
            continue
        if isinstance(cfg.get(key), dict) and isinstance(value, dict):
            cfg[key] = {**cfg[key], **value}
        else:
            cfg[key] = value
    return cfg


def _model_flags(ns) -> dict:
    flags = {k: getattr(ns, k, None) for k in ("model", "size", "param", "offset", "engine",
                                               "sector", "anchor", "tol", "seed", "workers",
                                               "out", "json", "svg")}
    if ns.range is not None:
        flags["range"] = ns.range
    if ns.measures is not None:
        flags["measures"] = ns.measures
    if ns.distances is not None:
        flags["distances"] = ns.distances
    if ns.e1_base is not None:
        flags["e1_base"] = ns.e1_base
    if ns.e2v_base is not None:
        flags["e2v_base"] = ns.e2v_base
    if ns.k_offset is not None:
        flags["k_offset"] = ns.k_offset
    params = {name: getattr(ns, f"p_{name}") for name in PARAM_FLAGS
              if getattr(ns, f"p_{name}") is not None}
    flags["params"] = params or None
    tau = {k: v for k, v in (("r_max", ns.r_max), ("tail_tol", ns.tail_tol),
                             ("patience", ns.patience)) if v is not None}
    flags["tau"] = tau or None
    disc = {k: v for k, v in (("n_theta", ns.n_theta), ("n_phi", ns.n_phi), ("levels", ns.levels),
                              ("shrink", ns.shrink), ("tol", ns.discord_tol),
                              ("base", ns.discord_base)) if v is not None}
    flags["discord"] = disc or None
    return flags


def resolve_model_config(cfg: dict, phase: bool = False) -> dict:
    """Validate and normalize a scan/phasediag config in place; returns it."""
    for key in ("model", "size", "param", "range"):
        if cfg.get(key) is None:
            raise UsageError(f"missing required setting {key!r}")
    fam = str(cfg["model"]).lower()
    if fam not in FAMILIES:
        raise UsageError(f"model: unknown family {cfg['model']!r}")
    cfg["model"] = fam
    try:
        cfg["size"] = int(cfg["size"])
    except (TypeError, ValueError):
        raise UsageError("size must be an integer") from None
    params = {("lambda" if k == "lam" else k): float(v) for k, v in dict(cfg["params"]).items()}
    for k in params:
        if k not in FAMILIES[fam]:
            raise UsageError(f"params: {k!r} is not a parameter of {fam}")
    cfg["params"] = {k: params.get(k, 0.0) for k in FAMILIES[fam]}
    axes = [("param", "range")] + ([("x_param", "x_range")] if phase else [])
    for pkey, rkey in axes:
        if cfg.get(pkey) is None or cfg.get(rkey) is None:
            raise UsageError(f"missing required setting {pkey!r} or {rkey!r}")
        name = "lambda" if cfg[pkey] == "lam" else cfg[pkey]
        if name not in FAMILIES[fam]:
            raise UsageError(f"{pkey}: {cfg[pkey]!r} is not a parameter of {fam}")
        cfg[pkey] = name
        rng = cfg[rkey]
        cfg[rkey] = parse_range(rng) if isinstance(rng, str) else parse_range(":".join(map(str, rng)))
    cfg["offset"] = float(cfg["offset"])
    if cfg["engine"] not in ("ed", "ff"):
        raise UsageError("engine must be 'ed' or 'ff'")
    if cfg["engine"] == "ff" and fam != "xymi":
        raise UsageError("engine: 'ff' is only available for the xymi model")
    if cfg["engine"] == "ff" and cfg["size"] % 2 == 0:
        raise UsageError("size: the free-fermion engine needs an odd N")
    cfg["measures"] = _csv_list(cfg["measures"])
    if not cfg["measures"]:
        raise UsageError("measures: empty measure set")
    bad = [m for m in cfg["measures"] if m not in MEASURES]
    if bad:
        raise UsageError(f"measures: unknown measure {bad[0]!r}")
    try:
        cfg["distances"] = _csv_list(cfg["distances"], int)
    except ValueError:
        raise UsageError("distances must be integers") from None
    cfg["e1_base"] = parse_base(cfg["e1_base"])
    cfg["e2v_base"] = parse_base(cfg["e2v_base"])
    tau = {**TAU_DEFAULTS[cfg["engine"]], **dict(cfg["tau"])}
    if isinstance(tau["r_max"], str):
        tau["r_max"] = None if tau["r_max"].lower() in ("all", "none") else int(tau["r_max"])
    unknown = set(tau) - set(TAU_DEFAULTS["ed"])
    if unknown:
        raise UsageError(f"tau: unknown key {sorted(unknown)[0]!r}")
    cfg["tau"] = tau
    disc = dict(cfg["discord"])
    if "base" in disc:
        disc["base"] = parse_base(disc["base"])
    known = set(DiscordConfig.__dataclass_fields__)
    unknown = set(disc) - known
    if unknown:
        raise UsageError(f"discord: unknown key {sorted(unknown)[0]!r}")
    cfg["discord"] = {**DiscordConfig().__dict__, **disc}
    cfg["k_offset"] = _k_offset(cfg["k_offset"])
    if str(cfg["sector"]) not in ("auto", "full", "lowest"):
        try:
            cfg["sector"] = str(float(cfg["sector"]))
        except ValueError:
            raise UsageError("sector must be auto, full, lowest or an S_z value") from None
    if cfg["workers"] is not None and int(cfg["workers"]) < 1:
        raise UsageError("workers must be >= 1")
    if phase:
        cfg["prominence"] = float(cfg["prominence"])
        cfg["max_jump"] = float(cfg["max_jump"])
    return cfg


def settings_from_config(cfg: dict) -> EvalSettings:
    try:
        return EvalSettings(
            measures=tuple(cfg["measures"]),
            distances=tuple(cfg["distances"]),
            engine=cfg["engine"],
            anchor=int(cfg["anchor"]),
            tau=TauConfig(anchor=int(cfg["anchor"]), **cfg["tau"]),
            discord=DiscordConfig(**cfg["discord"]),
            e1_base=cfg["e1_base"],
            e2v_base=cfg["e2v_base"],
            sector=str(cfg["sector"]),
            k_offset=cfg["k_offset"],
            tol=float(cfg["tol"]),
            seed=int(cfg["seed"]),
        )
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def template_from_config(cfg: dict) -> ModelSpec:
    try:
        spec = ModelSpec(cfg["model"], cfg["size"], cfg["params"])
    except InvalidModelError as exc:
        raise UsageError(f"model: {exc}") from None
    if cfg["anchor"] < 1 or cfg["anchor"] > spec.n_sites:
        raise UsageError("anchor must be a site in 1..N")
    return spec


def resolve_workers(cfg: dict) -> int:
    if cfg.get("workers") is not None:
        return int(cfg["workers"])
    try:
        return default_workers()
    except ValueError as exc:
        raise UsageError(str(exc)) from None


@contextmanager
def _open_out(path):
    if path in (None, "-"):
        yield sys.stdout
        return
    try:
        fh = open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from None
    with fh:
        yield fh


OUTPUT_KEYS = ("out", "json", "svg")


def _echo(command: str, cfg: dict) -> dict:
    """Effective configuration as recorded in outputs; destinations are left out
    so identical runs produce identical files wherever they are written."""
    return {"command": command, **{k: v for k, v in cfg.items() if k not in OUTPUT_KEYS}}


def _numerical_failure(records) -> str | None:
    for r in records:
        if r.error and r.error.split(":", 1)[0] in ("NumericalIntegrityError", "ConvergenceError"):
            return f"{r.param}={fmt_float(r.value)}: {r.error}"
    return None


def _features(x, y) -> list[dict]:
    return [{"location": e.location, "value": e.value, "kind": e.kind} for e in find_extrema(x, y)]


def _scan_summary(records, columns) -> dict:
    out = {}
    for c in columns:
        x, y = series(records, c)
        entry = {"extrema": [], "derivative_extrema": []}
        if np.isfinite(y).sum() >= 3:
            entry["extrema"] = _features(x, y)
            if x.size >= 3:
                _, d = derivative(x, y)
                entry["derivative_extrema"] = _features(x, d)
        out[c] = entry
    return out


# -------------------------------------------------------------------- commands


def cmd_scan(cfg: dict) -> int:
    cfg = resolve_model_config(cfg)
    st = settings_from_config(cfg)
    template = template_from_config(cfg)
    lo, hi, step = cfg["range"]
    grid = grid_values(lo, hi, step, cfg["offset"])
    columns = st.columns()
    echo = _echo("scan", cfg)
    header = header_lines("scan", __version__, st.seed, echo)
    with _open_out(cfg["out"]) as fh:
        writer = ScanCsvWriter(fh, header, scan_columns(cfg["param"], columns))
        records = scan(template, cfg["param"], grid, st, resolve_workers(cfg),
                       on_record=lambda i, rec: writer.write(rec))
    if cfg["json"]:
        write_json(cfg["json"], {"command": "scan", "version": __version__, "config": echo,
                                 "columns": columns, "records": records_to_json(records),
                                 "features": _scan_summary(records, columns)})
    if cfg["svg"]:
        x = [r.value for r in records]
        plot = line_plot(x, {c: series(records, c)[1] for c in columns}, cfg["param"],
                         title=f"{cfg['model']} N={cfg['size']}")
        _write_text(cfg["svg"], plot)
    failure = _numerical_failure(records)
    if failure:
        print(f"numerical integrity failure at {failure}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_phasediag(cfg: dict) -> int:
    cfg = resolve_model_config(cfg, phase=True)
    st = settings_from_config(cfg)
    if "tau_sef" not in st.measures:
        raise UsageError("measures: phasediag maps d tau_sef / d y and needs tau_sef")
    template = template_from_config(cfg)
    x_grid = grid_values(*cfg["x_range"])
    y_grid = grid_values(*cfg["range"], cfg["offset"])
    echo = _echo("phasediag", cfg)
    diag = phase_diagram(template, cfg["x_param"], x_grid, cfg["param"], y_grid, st,
                         prominence=cfg["prominence"], max_jump=cfg["max_jump"],
                         workers=resolve_workers(cfg))
    with _open_out(cfg["out"]) as fh:
        for line in header_lines("phasediag", __version__, st.seed, echo):
            fh.write(line + "\n")
        fh.write(f"{cfg['x_param']},{cfg['param']},dtau_sef\n")
        for xv, yv, fv in diag.cells():
            fh.write(f"{fmt_float(xv)},{fmt_float(yv)},{fmt_float(fv)}\n")
        fh.flush()
    if cfg["json"]:
        write_json(cfg["json"], {
            "command": "phasediag", "version": __version__, "config": echo,
            "x_name": diag.x_name, "y_name": diag.y_name,
            "shape": [int(diag.x.size), int(diag.y.size)],
            "ridges": [[{"x": a, "y": b} for a, b in line] for line in diag.ridges],
            "regions": count_regions(diag),
            "ridge_onsets": ridge_onsets(diag),
        })
    if cfg["svg"]:
        _write_text(cfg["svg"], heat_map(diag.x, diag.y, diag.field, diag.ridges,
                                         cfg["x_param"], cfg["param"],
                                         title=f"d tau_SEF / d {cfg['param']}"))
    if not np.all(np.isfinite(diag.field)):
        print("numerical integrity failure: non-finite derivative cells", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_fss(cfg: dict) -> int:
    inputs = cfg["inputs"]
    if not inputs:
        raise UsageError("fss needs scan CSV inputs")
    window = None
    if cfg["window"]:
        w = cfg["window"] if isinstance(cfg["window"], (list, tuple)) else str(cfg["window"]).split(":")
        if len(w) != 2:
            raise UsageError("window must look like lo:hi")
        window = (float(w[0]), float(w[1]))
    if cfg["kind"] not in ("min", "max"):
        raise UsageError("kind must be min or max")
    points = []
    for path in inputs:
        try:
            parsed = read_csv(path)
        except (OSError, KeyError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read scan {path}: {exc}") from None
        if cfg["measure"] not in parsed.columns:
            raise UsageError(f"{path}: no column {cfg['measure']!r}")
        param = parsed.columns[0]
        x = np.array([float(r[param]) for r in parsed.rows])
        y = np.array([float(r[cfg["measure"]]) for r in parsed.rows])
        if cfg["derivative"]:
            x, y = derivative(x, y)
        if window is not None:
            keep = (x >= window[0]) & (x <= window[1])
            x, y = x[keep], y[keep]
        if x.size == 0:
            raise UsageError(f"{path}: no grid points inside the window")
        loc, val = extremum_of(x, y, cfg["kind"])
        points.append((int(parsed.config.get("size", 0)), loc, val))
    res = finite_size_scaling(points)
    payload = {"command": "fss", "version": __version__,
               "config": {"command": "fss", **cfg, "window": list(window) if window else None},
               "measure": cfg["measure"], "kind": cfg["kind"], **res.to_dict()}
    if cfg["json"]:
        write_json(cfg["json"], payload)
    else:
        json.dump(payload, sys.stdout, indent=2)
        sys.stdout.write("\n")
    if cfg["svg"]:
        inv = [1.0 / n ** 2 for n, _, _ in res.points]
        _write_text(cfg["svg"], fit_plot(inv, [v for _, _, v in res.points], res.slope,
                                         res.intercept, cfg["measure"],
                                         title=f"{cfg['kind']} of {cfg['measure']} vs 1/N^2"))
    return EXIT_OK


def _write_text(path, text):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from None


# -------------------------------------------------------------------- validate

QUANTITIES = ("energy", "sz", "xx", "yy", "zz", "tau_sef")

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def ed_quantities(gamma, lam, alpha, beta, n, max_r=3) -> dict:
    """Exact-diagonalization values of the quantities compared by ``validate``."""
    spec = ModelSpec("xymi", n, {"gamma": gamma, "lambda": lam, "alpha": alpha, "beta": beta})
    gs = ground_state(build_hamiltonian(spec), tol=1e-12)
    r1 = rdm1(gs, 1).matrix
    out = {"energy": gs.energy, "gap": gs.gap, "sz": float(np.real(np.trace(r1 @ PAULI["z"])))}
    for r in range(1, max_r + 1):
        m = rdm2(gs, 1, 1 + r).matrix
        for a in "xyz":
            out[f"{a}{a}_r{r}"] = float(np.real(np.trace(m @ np.kron(PAULI[a], PAULI[a]))))
    out["tau_sef"] = tau_sef(gs, TauConfig(), reflection=True)
    return out


def ff_quantities(gamma, lam, alpha, beta, n, k_offset="auto", max_r=3) -> dict:
    ch = ff.chain(gamma, lam, alpha, beta, n, k_offset)
    out = {"energy": ch.energy, "sz": ch.magnetization, "k_offset": ch.p.k_offset}
    for r in range(1, max_r + 1):
        xx, yy, zz = ch.correlators(r)
        out[f"xx_r{r}"], out[f"yy_r{r}"], out[f"zz_r{r}"] = xx, yy, zz
    out["tau_sef"] = ff.tau_sef_details(ch, TauConfig(r_max=None, tail_tol=0.0))["tau_sef"]
    return out


def _draw(rng) -> tuple[float, float, float, float]:
    return (float(rng.uniform(-1, 1)), float(rng.uniform(-2, 3)),
            float(rng.uniform(-0.6, 0.6)), float(rng.uniform(-0.4, 0.4)))


def _ambiguous(point, n, gap) -> bool:
    """True within 1e-3 of a gap closing or of a crossing between the two momentum grids."""
    g, lam, a, b = point
    p = ff.FfParams(g, lam, a, b, n)
    e0 = ff.ground_energy(p.with_offset(0.0))
    e1 = ff.ground_energy(p.with_offset(0.5))
    return gap < 1e-3 or abs(e0 - e1) < 1e-3


def compare_point(point, n, k_offset="auto", max_r=3) -> dict:
    ed = ed_quantities(*point, n, max_r)
    fv = ff_quantities(*point, n, k_offset, max_r)
    dev = {}
    for q in QUANTITIES:
        if q in ("xx", "yy", "zz"):
            dev[q] = max(abs(ed[f"{q}_r{r}"] - fv[f"{q}_r{r}"]) for r in range(1, max_r + 1))
        else:
            dev[q] = abs(ed[q] - fv[q])
    return {"point": dict(zip(("gamma", "lambda", "alpha", "beta"), point)), "n_sites": n,
            "k_offset": fv["k_offset"], "ed_gap": ed["gap"], "deviation": dev}


def validation_report(sizes=(7, 9, 11), draws=20, seed=0, threshold=1e-6, k_offset="auto",
                      max_r=3, extra_points=()) -> dict:
    """ED versus free-fermion comparison over random parameter draws.

    Draws within 1e-3 of a gap closing (ED gap) or of a crossing between the
    two momentum grids are rejected and replaced.
    """
    per_size = {}
    worst = {q: 0.0 for q in QUANTITIES}
    checks = []
    rejected = 0
    for n in sizes:
        rng = np.random.default_rng([seed, n])
        size_worst = {q: 0.0 for q in QUANTITIES}
        accepted, attempts = 0, 0
        while accepted < draws:
            attempts += 1
            if attempts > 50 * max(draws, 1):
                raise NumericalIntegrityError(f"N={n}: too many rejected draws")
            point = _draw(rng)
            res = compare_point(point, n, k_offset, max_r)
            if _ambiguous(point, n, res["ed_gap"]):
                rejected += 1
                continue
            accepted += 1
            checks.append(res)
            for q, v in res["deviation"].items():
                size_worst[q] = max(size_worst[q], v)
        for point in extra_points:
            res = compare_point(tuple(point), n, k_offset, max_r)
            checks.append(res)
            for q, v in res["deviation"].items():
                size_worst[q] = max(size_worst[q], v)
        per_size[str(n)] = size_worst
        for q in QUANTITIES:
            worst[q] = max(worst[q], size_worst[q])
    failing = [q for q in QUANTITIES if not worst[q] <= threshold]
    return {"command": "validate", "version": __version__, "threshold": threshold,
            "k_offset": k_offset, "seed": seed, "sizes": list(sizes), "draws": draws,
            "max_r": max_r, "rejected": rejected, "max_deviation": worst,
            "per_size": per_size, "failing": failing, "passed": not failing,
            "checks": checks}


def cmd_validate(cfg: dict) -> int:
    try:
        sizes = _csv_list(cfg["sizes"], int)
    except ValueError:
        raise UsageError("sizes must be integers") from None
    if any(n < 3 or n % 2 == 0 for n in sizes):
        raise UsageError("sizes must be odd integers >= 3")
    if any(n > 13 for n in sizes):
        raise UsageError("sizes above 13 are too large for the dense comparison")
    if int(cfg["draws"]) < 0 or int(cfg["max_r"]) < 1:
        raise UsageError("draws must be >= 0 and max-r >= 1")
    if min(sizes) <= 2 * int(cfg["max_r"]):
        raise UsageError("max-r must stay below N/2 for every size")
    report = validation_report(sizes, int(cfg["draws"]), int(cfg["seed"]), float(cfg["threshold"]),
                               _k_offset(cfg["k_offset"]), int(cfg["max_r"]))
    if cfg["json"]:
        write_json(cfg["json"], report)
    for q in QUANTITIES:
        status = "ok" if q not in report["failing"] else "FAIL"
        print(f"{q:8s} max |ED - ff| = {report['max_deviation'][q]:.3e}  {status}")
    if report["failing"]:
        print("validation failed for: " + ", ".join(report["failing"]), file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


# ------------------------------------------------------------------------ main


def _config_for(ns) -> dict:
    file_cfg = load_config_file(ns.config) if getattr(ns, "config", None) else {}
    if ns.command == "scan":
        return _merge(SCAN_DEFAULTS, file_cfg, _model_flags(ns))
    if ns.command == "phasediag":
        flags = _model_flags(ns)
        flags.update({"x_param": ns.x_param, "x_range": ns.x_range,
                      "prominence": ns.prominence, "max_jump": ns.max_jump})
        return _merge(PHASE_DEFAULTS, file_cfg, flags)
    if ns.command == "fss":
        flags = {"inputs": ns.inputs or None, "measure": ns.measure, "kind": ns.kind,
                 "window": ns.window, "derivative": ns.derivative, "json": ns.json, "svg": ns.svg}
        return _merge(FSS_DEFAULTS, file_cfg, flags)
    flags = {"sizes": ns.sizes, "draws": ns.draws, "seed": ns.seed, "threshold": ns.threshold,
             "k_offset": ns.k_offset, "max_r": ns.max_r, "json": ns.json}
    return _merge(VALIDATE_DEFAULTS, file_cfg, flags)


COMMANDS = {"scan": cmd_scan, "phasediag": cmd_phasediag, "fss": cmd_fss, "validate": cmd_validate}


RANGE_FLAGS = ("--range", "--x-range", "--window")


def _join_range_values(argv: list[str]) -> list[str]:
    # "--range -1.5:2:0.01" would otherwise be read as an unknown option
    out, i = [], 0
    while i < len(argv):
        if argv[i] in RANGE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-") \
                and ":" in argv[i + 1]:
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _join_range_values(list(sys.argv[1:] if argv is None else argv))
    try:
        ns = parser.parse_args(argv)
        if not ns.command:
            raise UsageError("choose a subcommand: scan, fss, phasediag, validate")
        cfg = _config_for(ns)
        return COMMANDS[ns.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InsufficientDataError, UnsupportedSectorError, InvalidModelError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalIntegrityError, ConvergenceError) as exc:
        print(f"numerical integrity failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
