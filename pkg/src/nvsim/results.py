"""Sweep output container and its CSV / JSON forms."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CSV_DIGITS = 12


def _fmt(x: float) -> str:
    return format(float(x), f".{CSV_DIGITS}g")


@dataclass
class SweepResult:
    """Parameter grid ``taus`` (us) and one array per observable column."""

    taus: np.ndarray
    columns: dict
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.taus = np.asarray(self.taus, dtype=float)
        for k, v in self.columns.items():
            v = np.asarray(v, dtype=float)
            if v.shape != self.taus.shape:
                raise ValueError(f"column {k!r} has {v.size} rows, grid has {self.taus.size}")
            self.columns[k] = v

    def __len__(self):
        return self.taus.size

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    @property
    def header(self) -> list[str]:
        return ["tau_us", *self.columns]

    def rows(self):
        for i, tau in enumerate(self.taus):
            yield [tau, *(c[i] for c in self.columns.values())]

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.header)
        for row in self.rows():
            writer.writerow([_fmt(v) for v in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    @classmethod
    def from_csv(cls, text: str) -> "SweepResult":
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        if not header or header[0] != "tau_us":
            raise ValueError("CSV header must start with 'tau_us'")
        data = [[float(v) for v in row] for row in reader if row]
        arr = np.array(data, dtype=float).reshape(len(data), len(header))
        return cls(arr[:, 0], {name: arr[:, j] for j, name in enumerate(header[1:], 1)})

    def to_dict(self) -> dict:
        def clean(x):
            return None if isinstance(x, float) and not math.isfinite(x) else x

        return {
            "metadata": self.metadata,
            "columns": self.header,
            "tau_us": [clean(float(t)) for t in self.taus],
            "data": {k: [clean(float(x)) for x in v] for k, v in self.columns.items()},
        }

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    @classmethod
    def from_json(cls, text: str) -> "SweepResult":
        doc = json.loads(text)

        def nan(v):
            return [math.nan if x is None else x for x in v]

        return cls(np.array(nan(doc["tau_us"]), dtype=float),
                   {k: np.array(nan(v), dtype=float) for k, v in doc["data"].items()},
                   metadata=doc.get("metadata", {}))
