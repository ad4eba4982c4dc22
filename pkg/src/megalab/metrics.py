from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

TRAIN_HEADER = ("step", "test_success", "entropy", "alpha", "intrinsic_success", "cutoff")
TOY_HEADER = ("iteration", "policy", "mean_entropy", "std_entropy", "mean_support", "std_support")


@dataclass(frozen=True)
class MetricRecord:
    step: int
    test_success_rate: float
    buffer_entropy: float
    alpha: float | None
    intrinsic_success_rate: float
    cutoff: float

    def __post_init__(self):
        for name in ("test_success_rate", "intrinsic_success_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} out of [0, 1]: {v}")
        if self.alpha is not None and not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha out of [0, 1]: {self.alpha}")
        if not math.isfinite(self.buffer_entropy):
            raise ValueError("buffer entropy must be finite")

    def row(self) -> tuple:
        return (
            self.step,
            self.test_success_rate,
            self.buffer_entropy,
            self.alpha,
            self.intrinsic_success_rate,
            self.cutoff,
        )


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


class CsvSink:
    """Comma-separated metric file; the header goes out with the first row.

    The file is opened (and truncated) on construction so an unwritable path
    fails before any work starts.
    """

    def __init__(self, path, header=TRAIN_HEADER):
        self.path = Path(path)
        self.header = tuple(header)
        if self.path.parent != Path(""):
            self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", newline="")
        self._wrote_header = False

    def write(self, row) -> None:
        if len(row) != len(self.header):
            raise ValueError(f"row has {len(row)} fields, header has {len(self.header)}")
        if not self._wrote_header:
            self._fh.write(",".join(self.header) + "\n")
            self._wrote_header = True
        self._fh.write(",".join(_fmt(v) for v in row) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def emit_metrics(records, sink: CsvSink) -> None:
    for record in records:
        sink.write(record.row() if isinstance(record, MetricRecord) else record)


def read_metrics(path) -> list[dict[str, str]]:
    """Load a metric CSV back as a list of dicts (empty fields stay empty strings)."""
    lines = Path(path).read_text().splitlines()
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:]]
