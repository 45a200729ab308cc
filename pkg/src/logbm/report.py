"""Report rows shared by the command line and the demos."""
from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass

from . import __version__

CSV_FIELDS = ("name", "inputs_hash", "value", "stderr", "samples", "seed", "version")


@dataclass(frozen=True)
class ReportRow:
    name: str
    inputs_hash: str
    value: float | None
    stderr: float | None = 0.0
    samples: int = 0
    seed: int | None = None
    version: str = __version__

    def to_json(self):
        return asdict(self)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for row in rows:
        d = row.to_json() if isinstance(row, ReportRow) else row
        writer.writerow(["" if d.get(k) is None else repr(d[k]) if isinstance(d.get(k), float) else d[k]
                         for k in CSV_FIELDS])
    return buf.getvalue()
