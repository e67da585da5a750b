"""Evaluation protocol: MAE, MAEV and interval bins for a gt/pred pair."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import List

from headpose6d.metrics import (
    DEFAULT_BIN_WIDTH,
    DEFAULT_SPAN,
    AngleMAE,
    Bin,
    VectorMAEV,
    binned_errors,
    mae_euler,
    maev,
    paired_ids,
)

TABLE_COLUMNS = ("Yaw", "Pitch", "Roll", "MAE", "Left", "Down", "Front", "MAEV")


@dataclass
class ErrorReport:
    mae: AngleMAE
    maev: VectorMAEV
    bins: List[Bin]
    n: int
    options: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "mae": self.mae._asdict(),
            "maev": self.maev._asdict(),
            "bins": [b._asdict() for b in self.bins],
            "n": self.n,
            "options": dict(self.options),
        }

    def to_json(self, indent=2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    def table_values(self):
        return (*self.mae, *self.maev)

    def to_table(self) -> str:
        """Aligned text table, two decimals, headline row then the bins."""
        width = 8
        lines = [
            "".join(f"{c:>{width}}" for c in TABLE_COLUMNS),
            "".join(f"{v:>{width}.2f}" for v in self.table_values()),
            "",
            f"n = {self.n}",
            "",
            f"{'angle':<6}{'lo':>9}{'hi':>9}{'count':>7}{'mae':>9}",
        ]
        for b in self.bins:
            mae = "-" if b.mae is None else f"{b.mae:.2f}"
            lines.append(f"{b.angle:<6}{b.lo:>9.2f}{b.hi:>9.2f}{b.count:>7d}{mae:>9}")
        return "\n".join(lines) + "\n"


def evaluate(gt, pred, wrap=False, bin_width=DEFAULT_BIN_WIDTH, span=DEFAULT_SPAN,
             intersect=False) -> ErrorReport:
    """Full report for predictions ``pred`` against ground truth ``gt``.

    Euler errors come from the Euler payload for Euler-tagged sets and from
    the frozen matrix-to-Euler conversion otherwise.
    """
    ids = paired_ids(gt, pred, intersect)
    options = {"wrap": bool(wrap), "bin_width": float(bin_width), "span": list(span),
               "intersect": bool(intersect)}
    return ErrorReport(
        mae=mae_euler(gt, pred, wrap=wrap, intersect=intersect),
        maev=maev(gt, pred, intersect=intersect),
        bins=binned_errors(gt, pred, bin_width=bin_width, wrap=wrap, span=span,
                           intersect=intersect),
        n=len(ids),
        options=options,
    )
