"""File formats: alignment and edge-length CSVs, estimate JSON records."""

from __future__ import annotations

import csv
import json

import numpy as np

from .estimators import EstimateResult
from .model import Alignment, EdgeSpec, letters_from_states, states_from_letters


def write_alignment_csv(alignment: Alignment, path, letters: bool = False) -> None:
    """Header ``site_1..site_N``, one row per leaf; letters need c == 4."""
    if letters and alignment.c != 4:
        raise ValueError("letter output needs a four-state alignment")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"site_{l + 1}" for l in range(alignment.n_sites)])
        for k in range(alignment.n):
            row = alignment.row(k)
            if letters:
                writer.writerow(list(letters_from_states(row)))
            else:
                writer.writerow(row)


def read_alignment_csv(path, c: int) -> Alignment:
    """Read an alignment written by :func:`write_alignment_csv`.

    Accepts integer states or (for c == 4) single letters per cell.
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or not header[0].startswith("site_"):
            raise ValueError(f"{path}: missing site_* header row")
        for cells in reader:
            if not cells:
                continue
            if len(cells) != len(header):
                raise ValueError(f"{path}: ragged row {cells!r}")
            if cells[0].strip().isdigit():
                rows.append([int(v) for v in cells])
            else:
                rows.append(list(states_from_letters("".join(v.strip() for v in cells))))
    if not rows:
        raise ValueError(f"{path}: no leaf rows")
    return Alignment(c=c, rows=np.asarray(rows, dtype=np.int64))


def write_edges_csv(edges: EdgeSpec, path) -> None:
    """One s value per line, no header."""
    with open(path, "w") as fh:
        for v in edges.values:
            fh.write(f"{v!r}\n")


def read_edges_csv(path) -> EdgeSpec:
    with open(path) as fh:
        values = [float(line) for line in fh if line.strip()]
    return EdgeSpec.empirical(values, allow_zero_mean=True)


def estimate_record(result: EstimateResult, wall_time: float) -> dict:
    """JSON-ready record of one reconstruction."""
    return {
        "method": result.method.value,
        "rho_hat": list(result.rho_hat.states),
        "log_score": result.log_score,
        "tied": result.tied,
        "edge_estimates": None
        if result.edge_estimates is None
        else list(result.edge_estimates),
        "warnings": list(result.warnings),
        "wall_time": wall_time,
    }


def write_estimate_json(result: EstimateResult, wall_time: float, path) -> None:
    with open(path, "w") as fh:
        json.dump(estimate_record(result, wall_time), fh, indent=2)
        fh.write("\n")
