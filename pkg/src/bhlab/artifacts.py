"""Files written by a run: CSV tables, two-column series, checkpoints, summary."""
import csv
from pathlib import Path

import numpy as np

from .filippov import write_path_csv
from .solver import write_checkpoint, write_field_csv


def fmt(value):
    """17 significant digits for floats, plain text otherwise."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    if isinstance(value, (list, tuple, np.ndarray)):
        return " ".join(fmt(v) for v in value)
    return str(value)


def write_table(path, header, columns):
    """RFC 4180 CSV with a header row, one column per array."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([fmt(v) for v in row])


def write_series(path, t, y):
    """Plot-ready two-column text: ``t value`` per line."""
    with open(path, "w") as fh:
        for a, b in zip(t, y):
            fh.write(f"{float(a):.17g} {float(b):.17g}\n")


def write_summary(path, items):
    """``key: value`` lines in insertion order."""
    with open(path, "w") as fh:
        for key, value in items.items():
            fh.write(f"{key}: {fmt(value)}\n")


def read_summary(path):
    out = {}
    for line in Path(path).read_text().splitlines():
        if ": " in line:
            k, v = line.split(": ", 1)
            out[k] = v
    return out


LEDGER_COLUMNS = ("t", "E", "X", "X_dot", "X_dot_sigma", "h", "s", "D", "P", "K", "S1", "S2",
                  "R", "residual_abs", "Gamma", "u_plus", "u_minus", "ubar_plus", "ubar_minus")


def write_stability_bundle(outdir, report, flux):
    """Every per-run artifact of a stability run into ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    led = report.ledger
    tr = np.array([r.traces for r in led.records])
    cols = [report.times, report.E, report.X, report.X_dot, report.X_dot_sigma, report.h,
            report.s, led.series("shock"), led.series("profile"), led.series("coupling"),
            led.series("source_rel"), led.series("source_diff"), led.series("residual"),
            led.series("residual_abs"), report.gamma, tr[:, 0], tr[:, 1], tr[:, 2], tr[:, 3]]
    write_table(outdir / "ledger.csv", LEDGER_COLUMNS, cols)
    write_series(outdir / "E.dat", report.times, report.E)
    write_series(outdir / "X.dat", report.times, report.X)
    write_series(outdir / "Gamma.dat", report.times, report.gamma)
    if report.trajectory is not None:
        states = report.trajectory.states
        write_checkpoint(outdir / "initial.bhlb", states[0])
        write_checkpoint(outdir / "final.bhlb", states[-1])
        write_field_csv(outdir / "final_field.csv", states[-1])
    if report.path is not None and report.traces is not None:
        write_path_csv(outdir / "path.csv", report.path, report.traces, flux)
