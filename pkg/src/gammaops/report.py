"""Tabular reports and their CSV / JSON serialization.

A report is a list of flat dataclass rows plus a metadata dict.  CSV output
puts the metadata on a leading ``# {json}`` comment line; floats are
written with ``repr`` (shortest round-trip form), so parsing the text back
reproduces the report exactly.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Optional


@dataclass(frozen=True)
class ReportRow:
    n: int
    k: int
    p: int
    x: float
    function_id: str
    measured: float
    bound: float
    ratio: float


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    k: int
    p: int
    x: float
    function_id: str
    operator_value: float
    function_value: float
    weighted_error: float


@dataclass(frozen=True)
class MomentRow:
    n: int
    k: int
    m: int
    kind: str
    numerator: int
    denominator: int
    float_value: float


@dataclass(frozen=True)
class ApplyRow:
    n: int
    k: int
    x: float
    function_id: str
    value: float
    error_estimate: float
    subdivisions_used: int
    converged: bool


ROW_TYPES = (ReportRow, ConvergenceRow, MomentRow, ApplyRow)


def ratio(measured: float, bound: float) -> float:
    return measured / bound if bound > 0 else math.inf


@dataclass
class ExperimentReport:
    rows: list
    metadata: dict = field(default_factory=dict)
    row_type: type = ReportRow

    @property
    def columns(self) -> tuple:
        return tuple(f.name for f in fields(self.row_type))

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.rows]

    def extend(self, other: "ExperimentReport") -> None:
        if other.row_type is not self.row_type:
            raise TypeError("cannot merge reports with different row types")
        self.rows.extend(other.rows)

    # serialization -----------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        if self.metadata:
            buf.write("# " + json.dumps(self.metadata, sort_keys=True, default=_json_default) + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_format(getattr(row, c)) for c in self.columns])
        return buf.getvalue()

    def to_json(self) -> str:
        payload = {
            "columns": list(self.columns),
            "metadata": self.metadata,
            "rows": [{k: _json_value(v) for k, v in asdict(r).items()} for r in self.rows],
        }
        return json.dumps(payload, sort_keys=True, indent=1, default=_json_default) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "ExperimentReport":
        lines = text.splitlines()
        metadata = {}
        if lines and lines[0].startswith("# "):
            metadata = json.loads(lines[0][2:])
            lines = lines[1:]
        reader = csv.reader(lines)
        header = tuple(next(reader))
        row_type = _row_type_for(header)
        rows = [_parse_row(row_type, dict(zip(header, values))) for values in reader]
        return cls(rows, metadata, row_type)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentReport":
        payload = json.loads(text)
        row_type = _row_type_for(tuple(payload["columns"]))
        rows = [_parse_row(row_type, r) for r in payload["rows"]]
        return cls(rows, payload["metadata"], row_type)


def _row_type_for(header: tuple) -> type:
    for rt in ROW_TYPES:
        if tuple(f.name for f in fields(rt)) == header:
            return rt
    raise ValueError(f"unrecognized report columns: {header}")


def _format(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


_PARSERS = {
    "int": int,
    "float": float,
    "str": str,
    "bool": lambda s: s in (True, "true", "True"),
}


def _parse_row(row_type: type, record: dict):
    kwargs = {}
    for f in fields(row_type):
        kwargs[f.name] = _PARSERS[f.type](record[f.name])
    return row_type(**kwargs)


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return _format(v) if not math.isnan(v) else "nan"
    return v


def _json_default(o):
    if isinstance(o, float):
        return _json_value(o)
    if hasattr(o, "__dataclass_fields__"):
        return asdict(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def clean_metadata(meta: Optional[dict]) -> dict:
    """Replace non-finite floats so metadata is plain JSON."""
    def walk(v):
        if isinstance(v, dict):
            return {str(k): walk(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [walk(x) for x in v]
        if isinstance(v, float) and not math.isfinite(v):
            return _json_value(v)
        return v
    return walk(meta or {})
