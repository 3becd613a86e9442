"""Plain-text dataset format, profile files and CSV helpers.

Dataset files are comma-separated with a header line::

    id,ground_truth,m_0,...,m_{K-1}[,g_0,...,g_{K-1}]

``ground_truth`` may be empty. The ``g_*`` columns (crowd annotation
frequencies) are optional unless human labels are to be synthesised.
Floats are written with ``repr`` so a write/read cycle is bit-exact.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..confusion import DirichletPrior
from ..domain import (
    ConfusionMatrix,
    DimensionMismatch,
    HumanProfile,
    InstanceRecord,
    ValidationError,
    check_simplex,
    validate_instance,
)


class DatasetError(ValidationError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message, field)
        self.line = line


class MissingField(DatasetError):
    pass


def fmt(x: float) -> str:
    return repr(float(x))


def dataset_header(k: int, with_freqs: bool = True) -> list[str]:
    cols = ["id", "ground_truth"] + [f"m_{j}" for j in range(k)]
    if with_freqs:
        cols += [f"g_{j}" for j in range(k)]
    return cols


def write_dataset(path, records: Sequence[InstanceRecord], k: int) -> None:
    with_freqs = all(r.annotation_freqs is not None for r in records)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(dataset_header(k, with_freqs))
    for r in records:
        row = [r.id, "" if r.ground_truth is None else str(int(r.ground_truth))]
        row += [fmt(v) for v in r.model_probs]
        if with_freqs:
            row += [fmt(v) for v in r.annotation_freqs]
        w.writerow(row)
    atomic_write(path, buf.getvalue())


def load_dataset(path, k: int, require_freqs: bool = False) -> list[InstanceRecord]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise DatasetError(f"cannot read {path}: {e}") from None
    rows = csv.reader(io.StringIO(text))
    try:
        header = next(rows)
    except StopIteration:
        raise DatasetError("empty file, expected a header line", line=1) from None
    m_cols = [c for c in header if c.startswith("m_")]
    g_cols = [c for c in header if c.startswith("g_")]
    if header[:2] != ["id", "ground_truth"]:
        raise DatasetError("header must start with 'id,ground_truth'", line=1)
    if len(m_cols) != k:
        raise DimensionMismatch(f"line 1: header has {len(m_cols)} model columns, expected K={k}", "model_probs")
    if g_cols and len(g_cols) != k:
        raise DimensionMismatch(f"line 1: header has {len(g_cols)} annotation columns, expected K={k}", "annotation_freqs")
    if require_freqs and not g_cols:
        raise MissingField("annotation_freqs (g_*) columns are required to synthesise human labels", line=1, field="annotation_freqs")
    if header != dataset_header(k, bool(g_cols)):
        raise DatasetError("unexpected column layout in header", line=1)

    records = []
    seen = set()
    for lineno, row in enumerate(rows, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DatasetError(f"expected {len(header)} fields, got {len(row)}", line=lineno)
        rid = row[0]
        if rid in seen:
            raise DatasetError(f"duplicate id {rid!r}", line=lineno, field="id")
        seen.add(rid)
        try:
            truth = int(row[1]) if row[1].strip() else None
            m = np.array([float(v) for v in row[2:2 + k]])
            g = np.array([float(v) for v in row[2 + k:]]) if g_cols else None
        except ValueError as e:
            raise DatasetError(f"parse error: {e}", line=lineno) from None
        try:
            m = check_simplex(m, "model_probs", renormalize=True)
            if g is not None:
                g = check_simplex(g, "annotation_freqs", renormalize=True)
            rec = InstanceRecord(id=rid, ground_truth=truth, model_probs=m, annotation_freqs=g)
            validate_instance(rec, k, pool_size=0)
        except ValidationError as e:
            err = type(e)(f"line {lineno}: {e}", e.field)
            err.line = lineno
            raise err from None
        records.append(rec)
    return records


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def read_csv(path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_profiles(path, profiles: Sequence[HumanProfile], **meta) -> None:
    doc = {
        "k": profiles[0].k,
        **meta,
        "humans": [
            {
                "id": p.id,
                "accuracy": p.accuracy,
                "cost": p.cost,
                "phi": p.phi.entries.tolist(),
            }
            for p in profiles
        ],
    }
    atomic_write(path, json.dumps(doc, indent=1) + "\n")


def read_profiles(path) -> tuple[list[HumanProfile], dict]:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ValidationError(f"cannot read profile file {path}: {e}", "profiles") from None
    try:
        profiles = [
            HumanProfile(id=int(h["id"]), phi=ConfusionMatrix(np.array(h["phi"])), accuracy=float(h["accuracy"]), cost=float(h["cost"]))
            for h in doc["humans"]
        ]
    except KeyError as e:
        raise ValidationError(f"profile file missing field {e}", str(e)) from None
    meta = {key: v for key, v in doc.items() if key != "humans"}
    if profiles and profiles[0].k != meta.get("k"):
        raise DimensionMismatch("profile matrices disagree with the declared k", "k")
    return profiles, meta


def prior_from_meta(meta: dict) -> DirichletPrior:
    p = meta.get("prior", {})
    return DirichletPrior(beta=p.get("beta", 1.0), gamma=p.get("gamma", 2.0))
