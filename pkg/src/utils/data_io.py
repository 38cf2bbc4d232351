"""
Risk Attitude - Market Data Ingestion and Result Tables

Input: one CSV per index with header ``date,return,market_cap,rf_annual``
(names remappable through CsvSchema), dates ``YYYY-MM``, optional ``#``
comment lines. Missing cells are hard errors, never imputed.

Output: fixed-schema tables per kind, written as CSV (header row, LF line
endings) or JSON (array of row objects). Numbers use 17 significant digits
so a write/load round trip is bit-exact. Non-finite values are written as
empty cells (CSV) or null (JSON) and read back as NaN.

Every write goes to a temp file in the target directory first and is moved
into place with os.replace(), so a failed run never leaves a partial table.
"""

import io
import json
import logging
import math
import os
import tempfile
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd

from ..core.errors import InvariantError, IoError, ParseError, RiskAttitudeError, SchemaError, ValidationError
from ..core.estimation import (
    Diagnostics,
    MarketRecord,
    MomentSeries,
    RiskAversionPoint,
    YearMonth,
    per_period_rf,
)
from ..core.portfolio import DatedWeight, clamp_weight

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
Exclusion = Tuple[YearMonth, YearMonth]

FORMATS = ("csv", "json")
PLOT_AXES = ("date", "wealth_sorted")


def format_number(value: float) -> str:
    """17 significant digits; empty string for NaN/inf."""
    if not math.isfinite(value):
        return ""
    return "%.17g" % value


# ---------------------------------------------------------------------------
# Market datasets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CsvSchema:
    """Logical column -> file column names, plus the percent switch."""
    date: str = "date"
    ret: str = "return"
    market_cap: str = "market_cap"
    rf_annual: str = "rf_annual"
    percent: bool = False

    @classmethod
    def from_mapping(cls, columns: Optional[Dict[str, str]] = None, percent: bool = False) -> "CsvSchema":
        columns = columns or {}
        unknown = set(columns) - {"date", "return", "market_cap", "rf_annual"}
        if unknown:
            raise SchemaError(f"unknown logical column(s): {', '.join(sorted(unknown))}")
        return cls(
            date=columns.get("date", "date"),
            ret=columns.get("return", "return"),
            market_cap=columns.get("market_cap", "market_cap"),
            rf_annual=columns.get("rf_annual", "rf_annual"),
            percent=percent,
        )

    def file_columns(self) -> Tuple[str, str, str, str]:
        return self.date, self.ret, self.market_cap, self.rf_annual


@dataclass(frozen=True)
class MarketDataset:
    index_name: str
    records: Tuple[MarketRecord, ...]
    exclusions: Tuple[Exclusion, ...] = ()
    excluded_count: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))
        object.__setattr__(self, "exclusions", tuple(self.exclusions))
        for prev, cur in zip(self.records, self.records[1:]):
            if not cur.date > prev.date:
                raise ValidationError(f"{self.index_name}: dates must be strictly increasing ({prev.date} then {cur.date})")
        for start, end in self.exclusions:
            if start > end:
                raise ValidationError(f"exclusion {start}..{end} ends before it starts")

    def __len__(self) -> int:
        return len(self.records)

    def returns(self) -> List[Tuple[YearMonth, float]]:
        return [(r.date, r.ret) for r in self.records]

    def rf_per_period(self, compounding: str = "geometric", periods_per_year: int = 12) -> Dict[YearMonth, float]:
        return {r.date: per_period_rf(r.rf_annual, compounding, periods_per_year) for r in self.records}


def parse_exclusion(text: str) -> Exclusion:
    """``YYYY-MM..YYYY-MM`` -> (start, end), both inclusive."""
    start_raw, sep, end_raw = text.strip().partition("..")
    if not sep:
        raise ParseError(f"exclusion '{text}' must look like YYYY-MM..YYYY-MM")
    start, end = YearMonth.parse(start_raw), YearMonth.parse(end_raw)
    if start > end:
        raise ValidationError(f"exclusion {start}..{end} ends before it starts")
    return start, end


def _content_lines(path: Path) -> List[Tuple[int, str]]:
    """(1-based line number, text) of every line that is neither blank nor a ``#`` comment."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            text = f.read()
    except FileNotFoundError:
        raise IoError(f"input file not found: {path}") from None
    except (OSError, UnicodeDecodeError) as e:
        raise IoError(f"cannot read {path}: {e}") from None
    return [
        (lineno, line)
        for lineno, line in enumerate(text.splitlines(), start=1)
        if line.strip() and not line.lstrip().startswith("#")
    ]


def _read_frame(path: Path) -> Tuple[pd.DataFrame, List[int]]:
    """Parse the content lines; returns the frame and the file line number of each data row."""
    lines = _content_lines(path)
    if not lines:
        raise SchemaError(f"{path}: file has no header row")
    # pandas sees exactly the numbered lines, so row i is file line numbers[i]
    buf = io.StringIO("\n".join(line for _, line in lines) + "\n")
    try:
        frame = pd.read_csv(buf, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise SchemaError(f"{path}: file has no header row") from None
    except pd.errors.ParserError as e:
        raise ParseError(f"{path}: {e}") from None
    return frame, [lineno for lineno, _ in lines[1:]]


def _cell_float(text: str, column: str, line: int) -> float:
    raw = text.strip()
    if not raw:
        raise ParseError(f"missing value in column '{column}'", line=line)
    try:
        return float(raw)
    except ValueError:
        raise ParseError(f"'{raw}' in column '{column}' is not a number", line=line) from None


def load_market_csv(
    path: PathLike,
    schema: Optional[CsvSchema] = None,
    label: Optional[str] = None,
    exclusions: Sequence[Exclusion] = (),
) -> MarketDataset:
    """Parse a market CSV into a sorted, duplicate-free dataset.

    Exclusions are attached, not applied; call apply_exclusions() next.
    """
    path = Path(path)
    schema = schema or CsvSchema()
    frame, line_numbers = _read_frame(path)
    missing = [c for c in schema.file_columns() if c not in frame.columns]
    if missing:
        raise SchemaError(f"{path.name}: missing column(s) {', '.join(missing)}")

    scale = 100.0 if schema.percent else 1.0
    records: Dict[YearMonth, MarketRecord] = {}
    for i, row in enumerate(frame.itertuples(index=False, name=None)):
        # short rows come back as NaN even with dtype=str
        cells = {k: (v if isinstance(v, str) else "") for k, v in zip(frame.columns, row)}
        line = line_numbers[i]
        try:
            date = YearMonth.parse(cells[schema.date])
        except ParseError as e:
            raise ParseError(str(e), line=line) from None
        if date in records:
            raise ValidationError(f"{path.name}: duplicate date {date} (line {line})")
        try:
            records[date] = MarketRecord(
                date=date,
                ret=_cell_float(cells[schema.ret], schema.ret, line) / scale,
                market_cap=_cell_float(cells[schema.market_cap], schema.market_cap, line),
                rf_annual=_cell_float(cells[schema.rf_annual], schema.rf_annual, line) / scale,
            )
        except ValidationError as e:
            raise ValidationError(f"line {line}: {e}") from None

    name = label or path.stem.upper()
    ds = MarketDataset(name, tuple(records[d] for d in sorted(records)), tuple(exclusions))
    logger.info("Loaded %d record(s) for %s from %s", len(ds), name, path)
    return ds


def apply_exclusions(ds: MarketDataset) -> MarketDataset:
    """Drop records inside any exclusion range. Idempotent."""
    if not ds.exclusions:
        return ds
    kept = tuple(
        r for r in ds.records
        if not any(start <= r.date <= end for start, end in ds.exclusions)
    )
    removed = len(ds.records) - len(kept)
    if removed:
        logger.info("Excluded %d record(s) from %s", removed, ds.index_name)
    return MarketDataset(ds.index_name, kept, ds.exclusions, ds.excluded_count + removed)


def write_market_csv(ds: MarketDataset, path: PathLike) -> Path:
    """Write a dataset in the input format (default column names, fractions)."""
    lines = [f"# index: {ds.index_name}", "date,return,market_cap,rf_annual"]
    for r in ds.records:
        lines.append(",".join((
            str(r.date), format_number(r.ret), format_number(r.market_cap), format_number(r.rf_annual),
        )))
    return _atomic_write_text(Path(path), "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Result tables
# ---------------------------------------------------------------------------


class TableKind(str, Enum):
    MOMENTS = "moments"
    RISK_AVERSION = "risk_aversion"
    WEIGHTS = "weights"
    CLAMPED_WEIGHTS = "clamped_weights"
    DIAGNOSTICS = "diagnostics"

    @property
    def columns(self) -> Tuple[str, ...]:
        return _COLUMNS[self]


_COLUMNS: Dict[TableKind, Tuple[str, ...]] = {
    TableKind.MOMENTS: ("date", "mu", "sigma"),
    TableKind.RISK_AVERSION: ("date", "wealth", "ara", "rra"),
    TableKind.WEIGHTS: ("date", "family", "w_s"),
    TableKind.CLAMPED_WEIGHTS: ("date", "family", "w_s", "w_s_raw"),
    TableKind.DIAGNOSTICS: ("series", "corr", "label", "tau"),
}

_TEXT_COLUMNS = frozenset({"date", "family", "series", "label"})


@dataclass
class ResultTable:
    """Rows are tuples in the kind's column order; text columns hold str."""
    kind: TableKind
    rows: List[Tuple[Any, ...]] = field(default_factory=list)
    comment: Optional[str] = None

    def __post_init__(self) -> None:
        width = len(self.kind.columns)
        for row in self.rows:
            if len(row) != width:
                raise SchemaError(f"{self.kind.value} rows need {width} values, got {len(row)}")

    @property
    def columns(self) -> Tuple[str, ...]:
        return self.kind.columns

    def column(self, name: str) -> List[Any]:
        try:
            idx = self.columns.index(name)
        except ValueError:
            raise SchemaError(f"{self.kind.value} table has no '{name}' column") from None
        return [row[idx] for row in self.rows]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=list(self.columns))


def moments_table(series: MomentSeries) -> ResultTable:
    return ResultTable(TableKind.MOMENTS, [(str(e.date), e.mu, e.sigma) for e in series.entries])


def risk_aversion_table(points: Sequence[RiskAversionPoint], cap_units: str = "market_cap units") -> ResultTable:
    for p in points:
        if p.ara != p.rra / p.wealth:
            raise InvariantError(f"{p.date}: ara {p.ara!r} != rra / wealth {p.rra / p.wealth!r}")
    return ResultTable(
        TableKind.RISK_AVERSION,
        [(str(p.date), p.wealth, p.ara, p.rra) for p in points],
        comment=f"ara units: 1/{cap_units}",
    )


def weights_table(
    weights: Sequence[DatedWeight],
    clamp: Optional[Tuple[float, float]] = None,
) -> ResultTable:
    if clamp is None:
        return ResultTable(TableKind.WEIGHTS, [(str(w.date), str(w.family), w.w_s) for w in weights])
    return ResultTable(
        TableKind.CLAMPED_WEIGHTS,
        [(str(w.date), str(w.family), clamp_weight(w.w_s, clamp), w.w_s) for w in weights],
    )


def diagnostics_table(report: Diagnostics) -> ResultTable:
    return ResultTable(
        TableKind.DIAGNOSTICS,
        [(row.series, row.corr, row.label.value, row.tau) for row in report.rows],
    )


def emit_plot_data(t: ResultTable, x_axis: str = "date") -> ResultTable:
    """Reorder rows chronologically or by wealth (stable, ties keep date order)."""
    if x_axis not in PLOT_AXES:
        raise SchemaError(f"x axis must be one of {PLOT_AXES}, got '{x_axis}'")
    key_column = "date" if x_axis == "date" else "wealth"
    idx = t.columns.index(key_column) if key_column in t.columns else None
    if idx is None:
        raise SchemaError(f"{t.kind.value} table has no '{key_column}' column to order by")
    if x_axis == "wealth_sorted":
        date_idx = t.columns.index("date")
        rows = sorted(t.rows, key=lambda row: row[date_idx])
        rows = sorted(rows, key=lambda row: row[idx])
    else:
        rows = sorted(t.rows, key=lambda row: row[idx])
    return ResultTable(t.kind, rows, t.comment)


def _render_csv(t: ResultTable) -> str:
    frame = t.to_frame()
    for col in t.columns:
        if col not in _TEXT_COLUMNS:
            frame[col] = [format_number(float(v)) for v in frame[col]]
    buf = io.StringIO()
    if t.comment:
        buf.write(f"# {t.comment}\n")
    frame.to_csv(buf, index=False, lineterminator="\n")
    return buf.getvalue()


def _render_json(t: ResultTable) -> str:
    objects = []
    for row in t.rows:
        items = []
        for col, val in zip(t.columns, row):
            if col in _TEXT_COLUMNS:
                text = json.dumps(str(val))
            else:
                text = format_number(float(val)) or "null"
            items.append(f"{json.dumps(col)}: {text}")
        objects.append("  {" + ", ".join(items) + "}")
    if not objects:
        return "[]\n"
    return "[\n" + ",\n".join(objects) + "\n]\n"


def write_table(t: ResultTable, path: PathLike, fmt: str = "csv") -> Path:
    if fmt not in FORMATS:
        raise ValidationError(f"output format must be one of {FORMATS}, got '{fmt}'")
    text = _render_csv(t) if fmt == "csv" else _render_json(t)
    out = _atomic_write_text(Path(path), text)
    logger.info("Wrote %s table (%d rows) to %s", t.kind.value, len(t.rows), out)
    return out


def _parse_cell(col: str, val: Any) -> Any:
    if col in _TEXT_COLUMNS:
        return str(val)
    if val is None or val == "":
        return math.nan
    try:
        return float(val)
    except (TypeError, ValueError):
        raise ParseError(f"'{val}' in column '{col}' is not a number") from None


def load_table(path: PathLike, kind: TableKind, fmt: str = "csv") -> ResultTable:
    """Read back a table written by write_table."""
    path = Path(path)
    expected = list(kind.columns)
    if fmt == "csv":
        frame, _ = _read_frame(path)
        if list(frame.columns) != expected:
            raise SchemaError(f"{path.name}: expected columns {expected}, found {list(frame.columns)}")
        raw_rows = list(frame.itertuples(index=False, name=None))
    elif fmt == "json":
        try:
            with open(path, "r", encoding="utf-8") as f:
                objects = json.load(f)
        except FileNotFoundError:
            raise IoError(f"table not found: {path}") from None
        except json.JSONDecodeError as e:
            raise ParseError(f"{path.name}: {e.msg}", line=e.lineno) from None
        if not isinstance(objects, list):
            raise SchemaError(f"{path.name}: expected a JSON array of rows")
        raw_rows = []
        for obj in objects:
            if not isinstance(obj, dict) or list(obj) != expected:
                raise SchemaError(f"{path.name}: row keys must be {expected}")
            raw_rows.append(tuple(obj[c] for c in expected))
    else:
        raise ValidationError(f"table format must be one of {FORMATS}, got '{fmt}'")
    rows = [tuple(_parse_cell(c, v) for c, v in zip(expected, row)) for row in raw_rows]
    return ResultTable(kind, rows)


# ---------------------------------------------------------------------------
# Atomic writes
# ---------------------------------------------------------------------------


def _atomic_write_text(path: Path, text: str) -> Path:
    """Write text via temp file + os.replace() in the target directory."""
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_path = tempfile.mkstemp(dir=str(path.parent), prefix=f".{path.name}_", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
                f.write(text)
            os.replace(tmp_path, str(path))
        except BaseException:
            try:
                os.unlink(tmp_path)
            except OSError:
                pass
            raise
    except RiskAttitudeError:
        raise
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from None
    return path
