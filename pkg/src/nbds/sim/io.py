"""Waveform CSV files: ``t,<state...>,sat`` with 17 significant digits."""
from __future__ import annotations

import csv
import io
import os

import numpy as np

from ..errors import ValidationError
from .engine import Waveform

FLOAT_FMT = "%.16e"


def _rows(w: Waveform):
    for t, row, s in zip(w.times, w.traces, w.sat):
        yield [FLOAT_FMT % t] + [FLOAT_FMT % v for v in row] + ["1" if s else "0"]


def waveform_csv(w: Waveform) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["t"] + list(w.states) + ["sat"])
    wr.writerows(_rows(w))
    return buf.getvalue()


def write_csv(w: Waveform, path):
    with open(path, "w", newline="") as fh:
        fh.write(waveform_csv(w))


def read_csv(path) -> Waveform:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "t" or rows[0][-1] != "sat":
        raise ValidationError(f"{path}: not a waveform CSV (header must be t,...,sat)")
    states = rows[0][1:-1]
    data = np.array([[float(v) for v in r[:-1]] for r in rows[1:]]).reshape(-1, len(states) + 1)
    sat = np.array([r[-1] == "1" for r in rows[1:]], dtype=bool)
    return Waveform(data[:, 0], states, data[:, 1:], sat)


LORENZ_PROJECTIONS = (("x", "y"), ("z", "y"), ("z", "x"))


def write_projections(w: Waveform, directory, pairs=LORENZ_PROJECTIONS, prefix=None):
    """One two-column CSV per phase-plane projection; returns the paths."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for a, b in pairs:
        name = f"{prefix + '_' if prefix else ''}{a}_{b}.csv"
        path = os.path.join(directory, name)
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow([a, b])
            for u, v in zip(w[a], w[b]):
                wr.writerow([FLOAT_FMT % u, FLOAT_FMT % v])
        paths.append(path)
    return paths
