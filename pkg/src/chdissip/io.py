"""Files written and read by the command line front end.

Every file starts with (CSV) or carries (JSON, key ``meta``) the line
``# chdissip <version> config_sha256=<hash>``.  Floats are written with
``repr`` so identical runs give identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from . import __version__
from .eulerian import EulerianState, derived_fields
from .evolution import Snapshot, Trajectory, compute_PQ, snapshot
from .lagrangian import LagrangianState

FIELD_COLUMNS = ("t", "x", "u", "F", "p", "p_x")


def meta_line(config_sha: str) -> str:
    return f"# chdissip {__version__} config_sha256={config_sha}"


def _num(v) -> str:
    return repr(float(v))


def write_json(path: Path, doc: dict, config_sha: str) -> None:
    out = {"meta": meta_line(config_sha), **doc}
    path.write_text(json.dumps(out, sort_keys=True, indent=1) + "\n")


def write_csv(path: Path, header, rows, config_sha: str) -> None:
    buf = io.StringIO()
    buf.write(meta_line(config_sha) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_num(v) for v in r])
    path.write_text(buf.getvalue())


def read_csv(path: Path) -> tuple[str, list[str], np.ndarray]:
    """Return ``(meta line, header, data)``."""
    lines = Path(path).read_text().splitlines()
    meta = lines[0] if lines and lines[0].startswith("#") else ""
    body = lines[1:] if meta else lines
    rows = list(csv.reader(body))
    header, data = rows[0], rows[1:]
    arr = np.array(data, dtype=float) if data else np.empty((0, len(header)))
    return meta, header, arr


def field_rows(t: float, state: EulerianState):
    f = derived_fields(state)
    for i in range(state.x.size):
        yield (t, f["x"][i], f["u"][i], f["F"][i], f["p"][i], f["p_x"][i])


# -- snapshots -------------------------------------------------------------
def snapshot_doc(s: Snapshot) -> dict:
    return {"t": s.t, "eulerian": s.eulerian.to_dict(), "lagrangian": s.lagrangian.to_dict(),
            "report": s.report.to_dict()}


def load_snapshot(path: Path) -> Snapshot:
    """Rebuild a snapshot from its JSON file.

    ``P, Q`` and the membership report are recomputed from the stored
    Lagrangian state; the stored Eulerian image is kept as written.
    """
    d = json.loads(Path(path).read_text())
    L = LagrangianState.from_dict(d["lagrangian"])
    E = EulerianState.from_dict(d["eulerian"])
    fresh = snapshot(L)
    return Snapshot(t=float(d["t"]), eulerian=E, lagrangian=L, pq=compute_PQ(L),
                    report=fresh.report)


def write_run(traj: Trajectory, out_dir: Path, config_doc: dict, config_sha: str,
              formats=("csv", "json")) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    p = out_dir / "config.json"
    p.write_text(json.dumps(config_doc, sort_keys=True, indent=1) + "\n")
    written.append(p)
    if "json" in formats:
        sdir = out_dir / "snapshots"
        sdir.mkdir(exist_ok=True)
        for k, s in enumerate(traj.snapshots):
            p = sdir / f"snap_{k:04d}.json"
            write_json(p, snapshot_doc(s), config_sha)
            written.append(p)
    if "csv" in formats:
        rows = (r for s in traj.snapshots for r in field_rows(s.t, s.eulerian))
        p = out_dir / "fields.csv"
        write_csv(p, FIELD_COLUMNS, rows, config_sha)
        written.append(p)
    p = out_dir / "history.csv"
    write_csv(p, ("t", "energy", "total"),
              zip(traj.step_t, traj.step_energy, traj.step_total), config_sha)
    written.append(p)
    p = out_dir / "events.csv"
    write_csv(p, ("tau", "cell"), traj.events, config_sha)
    written.append(p)
    if traj.snapshots:
        p = out_dir / "checkpoint.json"
        write_json(p, {"config": config_doc, "lagrangian": traj.snapshots[-1].lagrangian.to_dict()},
                   config_sha)
        written.append(p)
    return written


def load_run(run_dir: Path) -> tuple[dict, list[Snapshot], dict[str, np.ndarray]]:
    """Config document, snapshots (sorted by time) and per-step history of a run."""
    run_dir = Path(run_dir)
    cfg = json.loads((run_dir / "config.json").read_text())
    files = sorted((run_dir / "snapshots").glob("snap_*.json"))
    if not files:
        raise FileNotFoundError(f"no snapshots in {run_dir / 'snapshots'}")
    snaps = sorted((load_snapshot(f) for f in files), key=lambda s: s.t)
    hist = {}
    hp = run_dir / "history.csv"
    if hp.is_file():
        _, header, data = read_csv(hp)
        hist = {h: data[:, i] for i, h in enumerate(header)} if data.size else {}
    return cfg, snaps, hist


PLOT_SCRIPT = '''"""Plot the CSV written next to this file (generated by chdissip).

Usage: python {name} [output.png]
"""
import sys
from pathlib import Path

import numpy as np
import matplotlib.pyplot as plt

here = Path(__file__).parent
data = np.loadtxt(here / "{csv}", delimiter=",", skiprows=2)
t, x = data[:, 0], data[:, 1]
fig, axes = plt.subplots(1, 3, figsize=(13, 3.8))
for ax, col, label in zip(axes, (2, 3, 4), ("u", "F", "p")):
    for tk in np.unique(t):
        m = t == tk
        ax.plot(x[m], data[m, col], lw=1, label=f"t={{tk:g}}")
    ax.set_xlabel("x")
    ax.set_title(label)
axes[0].legend(fontsize=7)
fig.tight_layout()
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else here / "{stem}.png", dpi=150)
'''


def write_plot_script(out_dir: Path, csv_name: str) -> Path:
    stem = Path(csv_name).stem
    p = out_dir / f"plot_{stem}.py"
    p.write_text(PLOT_SCRIPT.format(name=p.name, csv=csv_name, stem=stem))
    return p
