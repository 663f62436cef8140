"""CSV ingestion and persistence for expression panels and time vectors.

Two panel layouts are supported:

* ``samples`` (default): header ``time_hours,<gene>,<gene>,...``; one row
  per sample, first cell the collection time.
* ``genes``: header ``gene,<t1>,<t2>,...`` with sample times in the
  header; one row per gene, first cell the gene id.

Genes containing any missing or non-numeric value are dropped (and
counted); malformed times or structure raise IngestionError.  Floats are
written with 17 significant digits so a write/read round trip is exact.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IngestionError, InvalidArgumentError

logger = logging.getLogger(__name__)

LAYOUT_SAMPLES = "samples"
LAYOUT_GENES = "genes"
_LAYOUTS = (LAYOUT_SAMPLES, LAYOUT_GENES)

TIME_COLUMN = "time_hours"

_MISSING_TOKENS = {"", "na", "nan", "n/a", "null", "none"}


def format_float(x):
    """Serialize a float with 17 significant digits (round-trip exact)."""
    return format(float(x), ".17g")


def _parse_cell(text):
    """Parse one expression cell; returns None for missing/non-numeric."""
    s = text.strip()
    if s.lower() in _MISSING_TOKENS:
        return None
    try:
        v = float(s)
    except ValueError:
        return None
    if not math.isfinite(v):
        return None
    return v


def _parse_time(text, where):
    try:
        v = float(text.strip())
    except ValueError:
        raise IngestionError(f"unparseable time {text!r} at {where}") from None
    if not math.isfinite(v):
        raise IngestionError(f"non-finite time {text!r} at {where}")
    return v


@dataclass
class TimeSeriesPanel:
    """Expression panel: shared sample times plus one row per gene.

    ``times`` are hours reduced to [0, 24); ``expr`` has shape
    (genes, samples).  ``provenance`` records the source path, layout,
    and any genes dropped during ingestion.
    """

    times: np.ndarray
    gene_ids: list
    expr: np.ndarray
    provenance: dict = field(default_factory=dict)

    @property
    def n_samples(self):
        return self.times.size

    @property
    def n_genes(self):
        return len(self.gene_ids)


def _build_panel(times, gene_ids, rows, source, layout):
    """Assemble a panel from parsed cells, dropping incomplete genes."""
    if len(times) < 2:
        raise IngestionError(f"{source}: need at least 2 samples, got {len(times)}")
    seen = set()
    for gid in gene_ids:
        if gid in seen:
            raise IngestionError(f"{source}: duplicate gene id {gid!r}")
        seen.add(gid)

    kept_ids, kept_rows, dropped = [], [], []
    for gid, row in zip(gene_ids, rows):
        if any(v is None for v in row):
            dropped.append(gid)
        else:
            kept_ids.append(gid)
            kept_rows.append(row)
    if dropped:
        logger.info(
            "dropped %d gene(s) with missing or non-numeric values: %s",
            len(dropped),
            ", ".join(map(str, dropped[:10])) + ("..." if len(dropped) > 10 else ""),
        )
    expr = (
        np.array(kept_rows, dtype=float)
        if kept_rows
        else np.empty((0, len(times)))
    )
    t = np.mod(np.asarray(times, dtype=float), 24.0)
    return TimeSeriesPanel(
        times=t,
        gene_ids=kept_ids,
        expr=expr,
        provenance={
            "source": str(source),
            "layout": layout,
            "n_dropped": len(dropped),
            "dropped_gene_ids": dropped,
        },
    )


def ingest_csv(path, layout=LAYOUT_SAMPLES):
    """Read an expression panel from CSV.

    Raises
    ------
    IngestionError
        On unreadable/structurally invalid files, bad times, duplicate
        gene ids, or fewer than 2 samples.
    """
    if layout not in _LAYOUTS:
        raise InvalidArgumentError(f"layout must be one of {_LAYOUTS}, got {layout!r}")
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if len(rows) < 2:
        raise IngestionError(f"{path}: no data rows")
    header, body = rows[0], rows[1:]

    if layout == LAYOUT_SAMPLES:
        if len(header) < 2 or header[0].strip() != TIME_COLUMN:
            raise IngestionError(
                f"{path}: samples layout needs a header starting with {TIME_COLUMN!r}"
            )
        gene_ids = [h.strip() for h in header[1:]]
        times, columns = [], [[] for _ in gene_ids]
        for i, row in enumerate(body, start=2):
            if len(row) != len(header):
                raise IngestionError(
                    f"{path}: row {i} has {len(row)} cells, expected {len(header)}"
                )
            times.append(_parse_time(row[0], f"{path} row {i}"))
            for g, cell in enumerate(row[1:]):
                columns[g].append(_parse_cell(cell))
        return _build_panel(times, gene_ids, columns, path, layout)

    # genes layout: times live in the header
    if len(header) < 3:
        raise IngestionError(f"{path}: genes layout needs id column plus >= 2 times")
    times = [
        _parse_time(cell, f"{path} header column {j}")
        for j, cell in enumerate(header[1:], start=2)
    ]
    gene_ids, gene_rows = [], []
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise IngestionError(
                f"{path}: row {i} has {len(row)} cells, expected {len(header)}"
            )
        gene_ids.append(row[0].strip())
        gene_rows.append([_parse_cell(c) for c in row[1:]])
    return _build_panel(times, gene_ids, gene_rows, path, layout)


def write_panel(panel, path, layout=LAYOUT_SAMPLES):
    """Write a panel back to CSV in the requested layout."""
    if layout not in _LAYOUTS:
        raise InvalidArgumentError(f"layout must be one of {_LAYOUTS}, got {layout!r}")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if layout == LAYOUT_SAMPLES:
            writer.writerow([TIME_COLUMN, *panel.gene_ids])
            for i in range(panel.n_samples):
                writer.writerow(
                    [format_float(panel.times[i])]
                    + [format_float(v) for v in panel.expr[:, i]]
                )
        else:
            writer.writerow(["gene", *(format_float(t) for t in panel.times)])
            for gid, row in zip(panel.gene_ids, panel.expr):
                writer.writerow([gid, *(format_float(v) for v in row)])


def read_time_csv(path):
    """Read a time vector from a single-column CSV headed ``time_hours``."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise IngestionError(f"{path}: empty time file")
    header = [h.strip() for h in rows[0]]
    if TIME_COLUMN not in header:
        raise IngestionError(f"{path}: no {TIME_COLUMN!r} column")
    col = header.index(TIME_COLUMN)
    times = []
    for i, row in enumerate(rows[1:], start=2):
        if col >= len(row):
            raise IngestionError(f"{path}: row {i} is missing the time cell")
        times.append(_parse_time(row[col], f"{path} row {i}"))
    if not times:
        raise IngestionError(f"{path}: no times found")
    return np.mod(np.asarray(times, dtype=float), 24.0)


def write_time_csv(times, path):
    """Write a single-column time CSV."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([TIME_COLUMN])
        for t in np.asarray(times, dtype=float):
            writer.writerow([format_float(t)])
