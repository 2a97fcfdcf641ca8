"""CSV and JSON persistence for scans, scaling fits and phase diagrams.

CSV files start with ``#``-prefixed header lines (``# key: value``); the
``config`` line holds the effective configuration as JSON, which is enough
to replay the run. Floats are written with 17 significant digits so that
parsing a file reproduces every value bit for bit.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

from qptdetect.analysis import ScanRecord

FLOAT_FORMAT = ".17g"


def fmt_float(v: float) -> str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, FLOAT_FORMAT)


def header_lines(kind: str, version: str, seed: int, config: dict) -> list[str]:
    return [
        f"# qptdetect {kind}",
        f"# version: {version}",
        f"# seed: {seed}",
        "# config: " + json.dumps(config, sort_keys=False, allow_nan=True),
    ]


def scan_columns(param: str, measure_columns: Sequence[str]) -> list[str]:
    return [param, *measure_columns, "degenerate", "error"]


class ScanCsvWriter:
    """Writes scan rows one at a time, flushing after each so an
    interrupted run keeps every completed point."""

    def __init__(self, stream: IO[str], header: list[str], columns: list[str]):
        self.stream = stream
        self.columns = columns
        for line in header:
            stream.write(line + "\n")
        self._writer = csv.writer(stream, lineterminator="\n")
        self._writer.writerow(columns)
        stream.flush()

    def write(self, rec: ScanRecord) -> None:
        row = [fmt_float(rec.value)]
        row += [fmt_float(rec.values.get(c, float("nan"))) for c in self.columns[1:-2]]
        row += ["1" if rec.degenerate else "0", rec.error or ""]
        self._writer.writerow(row)
        self.stream.flush()


@dataclass
class CsvFile:
    meta: dict[str, str]
    config: dict
    columns: list[str]
    rows: list[dict[str, str]] = field(default_factory=list)


def parse_csv(text: str) -> CsvFile:
    meta: dict[str, str] = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            content = line[1:].strip()
            if ":" in content:
                key, value = content.split(":", 1)
                meta[key.strip()] = value.strip()
            else:
                meta.setdefault("kind", content)
        elif line.strip():
            body.append(line)
    config = json.loads(meta["config"]) if "config" in meta else {}
    reader = csv.DictReader(io.StringIO("\n".join(body)))
    rows = list(reader)
    return CsvFile(meta, config, list(reader.fieldnames or []), rows)


def read_csv(path) -> CsvFile:
    with open(path, encoding="utf-8") as fh:
        return parse_csv(fh.read())


def records_from_csv(parsed: CsvFile) -> list[ScanRecord]:
    """Rebuild scan records (wall time and solver metadata are not stored)."""
    cfg = parsed.config
    param = parsed.columns[0]
    measure_cols = parsed.columns[1:-2]
    out = []
    for row in parsed.rows:
        out.append(ScanRecord(
            param=param,
            value=float(row[param]),
            n_sites=int(cfg.get("size", 0)),
            values={c: float(row[c]) for c in measure_cols},
            degenerate=row["degenerate"] == "1",
            anchor=int(cfg.get("anchor", 1)),
            error=row["error"] or None,
        ))
    return out


def write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(payload), fh, indent=2, allow_nan=True)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item") and callable(obj.item):
        return obj.item()
    return obj


def records_to_json(records: Iterable[ScanRecord]) -> list[dict]:
    return [{"value": r.value, "values": dict(r.values), "degenerate": r.degenerate,
             "error": r.error} for r in records]
