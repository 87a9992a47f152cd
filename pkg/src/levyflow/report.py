"""Result persistence and report aggregation.

CSV bodies are deterministic for a fixed config and seed: timestamps only
ever appear in ``#`` comment headers, which the body digest skips.  Plots are
static SVG files rendered with the Agg backend.
"""

from __future__ import annotations

import hashlib
import json
import os
from datetime import datetime, timezone

import numpy as np

from .experiments import ResultRecord

__all__ = ["write_record", "emit_report", "csv_body_digest", "load_record"]


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_record(rec: ResultRecord, out_dir: str, formats=("csv", "json")) -> str:
    """Write metrics.csv / summary.json / curve CSVs under out_dir/<id>/."""
    base = os.path.join(out_dir, rec.experiment_id)
    os.makedirs(base, exist_ok=True)
    stamp = datetime.now(timezone.utc).isoformat()
    if "csv" in formats:
        lines = [
            f"# levyflow {rec.kind} config={rec.config_hash} generated={stamp}",
            "name,value,se,oracle,tolerance,pass",
        ]
        for row in rec.rows:
            lines.append(",".join(_fmt(v) for v in row.as_list()))
        with open(os.path.join(base, "metrics.csv"), "w") as fh:
            fh.write("\n".join(lines) + "\n")
        for cname, cols in rec.curves.items():
            clines = [f"# levyflow curve {cname} config={rec.config_hash} generated={stamp}"]
            width = len(cols)
            clines.append(",".join(f"col{j}" for j in range(width)))
            for i in range(len(cols[0])):
                clines.append(",".join(_fmt(float(c[i])) for c in cols))
            with open(os.path.join(base, f"curve_{cname}.csv"), "w") as fh:
                fh.write("\n".join(clines) + "\n")
    if "json" in formats:
        with open(os.path.join(base, "summary.json"), "w") as fh:
            json.dump(rec.as_dict(), fh, indent=1, sort_keys=True)
    return base


def load_record(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def csv_body_digest(path: str) -> str:
    """sha256 of the CSV body (comment lines excluded)."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for line in fh:
            if not line.startswith(b"#"):
                h.update(line)
    return h.hexdigest()


def _plot_curves(rec_dict: dict, out_dir: str):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    for cname, cols in rec_dict.get("curves", {}).items():
        if len(cols) < 2 or not cols[0]:
            continue
        fig, ax = plt.subplots(figsize=(5, 3.5))
        xv = np.asarray(cols[0], dtype=float)
        for j, col in enumerate(cols[1:], start=1):
            yv = np.asarray(col, dtype=float)
            if (xv > 0).all() and (np.abs(yv) > 0).all():
                ax.loglog(xv, np.abs(yv), "o-", label=f"series {j}")
            else:
                ax.plot(xv, yv, "o-", label=f"series {j}")
        ax.set_title(f"{rec_dict['experiment_id']}: {cname}")
        ax.set_xlabel("x")
        ax.legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(os.path.join(out_dir, f"plot_{rec_dict['experiment_id']}_{cname}.svg"))
        plt.close(fig)


def emit_report(records, out_dir: str, plots: bool = True) -> dict:
    """Aggregate records into a machine-readable summary plus SVG plots.

    ``records`` may be ResultRecord objects or previously saved dicts.
    Returns the summary dict; the suite passes only if every record passed.
    """
    os.makedirs(out_dir, exist_ok=True)
    dicts = [r.as_dict() if isinstance(r, ResultRecord) else dict(r) for r in records]
    summary = {
        "all_passed": all(d["passed"] for d in dicts) if dicts else True,
        "n_records": len(dicts),
        "records": [
            {
                "experiment_id": d["experiment_id"],
                "kind": d["kind"],
                "config_hash": d["config_hash"],
                "passed": d["passed"],
                "n_rows": len(d["rows"]),
                "failed_rows": [r[0] for r in d["rows"] if not r[5]],
            }
            for d in dicts
        ],
    }
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
    lines = ["experiment_id,kind,passed,failed_rows"]
    for d in summary["records"]:
        lines.append(",".join([
            d["experiment_id"], d["kind"], "1" if d["passed"] else "0",
            ";".join(d["failed_rows"]),
        ]))
    with open(os.path.join(out_dir, "report.csv"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    if plots:
        for d in dicts:
            _plot_curves(d, out_dir)
    return summary
