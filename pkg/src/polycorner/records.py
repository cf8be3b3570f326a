"""Result records, deterministic JSON and atomic file output."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Sequence

import numpy as np

from . import __version__

OUT_ENV = "POLYCORNER_OUT"


def _float(v: float) -> str:
    if math.isnan(v):
        return '"nan"'
    if math.isinf(v):
        return '"inf"' if v > 0 else '"-inf"'
    s = format(v, ".17g")
    # keep floats recognizable as floats
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with sorted keys and every float printed with 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}"
                 for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(isinstance(v, (int, float, bool, str, np.number)) or v is None for v in seq):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in seq) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def atomic_write(path: Path, text: str) -> Path:
    """Write through a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format(float(v), ".17g") if isinstance(v, (float, np.floating)) else v
                    for v in row])
    return buf.getvalue()


def experiment_id(subcommand: str, params: dict, seed: int) -> str:
    canon = dumps({"subcommand": subcommand, "params": params, "seed": seed}, indent=0)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def output_root(cli_value=None) -> Path:
    if cli_value:
        return Path(cli_value)
    return Path(os.environ.get(OUT_ENV, "polycorner-out"))


@dataclass
class ResultRecord:
    subcommand: str
    params: dict
    seed: int
    outputs: Dict[str, object] = field(default_factory=dict)
    files: List[str] = field(default_factory=list)
    status: str = "ok"
    error: Dict[str, object] = field(default_factory=dict)
    duration: float = 0.0

    @property
    def id(self) -> str:
        return experiment_id(self.subcommand, self.params, self.seed)

    def document(self) -> dict:
        """Deterministic content; the wall-clock duration lives in the run log."""
        doc = {"experiment_id": self.id, "subcommand": self.subcommand, "input": self.params,
               "seed": self.seed, "status": self.status, "outputs": self.outputs,
               "files": sorted(self.files), "version": __version__}
        if self.error:
            doc["error"] = self.error
        return doc


class RecordWriter:
    """Writes one experiment directory: tables, result.json and an append-only run log."""

    def __init__(self, root: Path, record: ResultRecord):
        self.record = record
        self.dir = Path(root) / f"{record.subcommand}-{record.id}"

    def table(self, name: str, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
        return self.text(name, csv_text(header, rows))

    def text(self, name: str, content: str) -> Path:
        p = atomic_write(self.dir / name, content)
        if name not in self.record.files:
            self.record.files.append(name)
        return p

    def finish(self) -> Path:
        path = atomic_write(self.dir / "result.json", dumps(self.record.document()) + "\n")
        log = self.dir / "runs.jsonl"
        old = log.read_text() if log.exists() else ""
        entry = json.dumps({"experiment_id": self.record.id, "status": self.record.status,
                            "duration_seconds": round(self.record.duration, 6),
                            "version": __version__}, sort_keys=True)
        atomic_write(log, old + entry + "\n")
        return path
