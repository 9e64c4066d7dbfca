"""Report records: JSON + flat CSV emission for CLI runs.

Reports echo the full configuration so a run can be reproduced from its own
output; numeric result fields are bit-reproducible for a fixed config and
seed (wall-clock time is the one field that legitimately varies).
"""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

__all__ = ["ReportRecord", "CSV_COLUMNS"]

CSV_COLUMNS = ("quantity", "value", "stderr", "method", "N")


@dataclass
class ReportRecord:
    subcommand: str
    config: dict
    seed: int | None
    results: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)  # (quantity, value, stderr, method, N)
    wall_clock_seconds: float | None = None
    artifact_version: str = ""

    def add_row(self, quantity, value, stderr=None, method=None, N=None):
        self.rows.append((quantity, value, stderr, method, N))

    def to_json_dict(self) -> dict:
        return {
            "artifact_version": self.artifact_version,
            "subcommand": self.subcommand,
            "seed": self.seed,
            "config": self.config,
            "results": self.results,
            "wall_clock_seconds": self.wall_clock_seconds,
        }

    def write(self, outdir) -> tuple:
        """Write report.json and report.csv under outdir; returns the paths."""
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        jpath = outdir / "report.json"
        cpath = outdir / "report.csv"
        with open(jpath, "w") as f:
            json.dump(self.to_json_dict(), f, indent=2, sort_keys=True)
            f.write("\n")
        with open(cpath, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(CSV_COLUMNS)
            for quantity, value, stderr, method, N in self.rows:
                w.writerow(
                    [
                        quantity,
                        repr(float(value)),
                        "" if stderr is None else repr(float(stderr)),
                        "" if method is None else method,
                        "" if N is None else int(N),
                    ]
                )
        return jpath, cpath
