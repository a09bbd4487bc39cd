"""On-disk formats: raw two-channel recordings and parameter tables.

Signal files are CSV with header ``t,ecg,ip`` and one row per sample; the
sample rate is inferred from the median of successive ``t`` differences and
must be uniform within 1%.  Subject id and body position come from the file
name stem, ``<subject_id>_<position>.csv``, unless passed explicitly.

Parameter files are CSV with columns ``subject_id``, ``position`` and the ten
parameter names (any column order, no extras).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

PARAMETER_NAMES = (
    "HR",
    "RMSSD",
    "lnRMSSD",
    "RR",
    "ciRR",
    "cInsT",
    "cExpT",
    "cInsV",
    "cExpV",
    "BR",
)

# Deterministic functions of other parameters; structure search excludes or
# masks relationships between each entry and its sources.
DERIVED_SOURCES = {
    "lnRMSSD": ("RMSSD",),
    "BR": ("ciRR", "cInsT", "cExpT", "cInsV", "cExpV"),
}

_CV_NAMES = ("ciRR", "cInsT", "cExpT", "cInsV", "cExpV")


class FormatError(ValueError):
    """Input file violates the documented CSV contract."""


class Position(Enum):
    SUPINE = "supine"
    STANDING = "standing"

    @classmethod
    def parse(cls, text: str) -> "Position":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise FormatError(f"unknown position {text!r}") from None


def _parse_decimal(text: str, context: str) -> float:
    text = text.strip()
    if "," in text:
        raise FormatError(f"{context}: locale comma in number {text!r}")
    try:
        value = float(text)
    except ValueError:
        raise FormatError(f"{context}: not a number: {text!r}") from None
    if not math.isfinite(value):
        raise FormatError(f"{context}: non-finite value {text!r}")
    return value


@dataclass(frozen=True)
class SignalRecord:
    """One subject/position recording: synchronous ECG and impedance channels."""

    subject_id: str
    position: Position
    sample_rate_hz: float
    ecg: np.ndarray
    ip: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "ecg", np.asarray(self.ecg, dtype=float))
        object.__setattr__(self, "ip", np.asarray(self.ip, dtype=float))
        if not (isinstance(self.sample_rate_hz, (int, float)) and self.sample_rate_hz > 0):
            raise FormatError("sample_rate_hz must be positive")
        if self.ecg.ndim != 1 or self.ip.ndim != 1:
            raise FormatError("channels must be one-dimensional")
        if self.ecg.size != self.ip.size:
            raise FormatError(
                f"channel length mismatch: ecg has {self.ecg.size}, ip has {self.ip.size}"
            )
        if self.ecg.size < 30 * self.sample_rate_hz:
            raise FormatError("recording shorter than 30 s")
        if not (np.all(np.isfinite(self.ecg)) and np.all(np.isfinite(self.ip))):
            raise FormatError("non-finite sample")
        if not isinstance(self.position, Position):
            raise FormatError("position must be a Position")

    @property
    def duration_s(self) -> float:
        return self.ecg.size / self.sample_rate_hz


@dataclass(frozen=True)
class ParameterRow:
    subject_id: str
    position: Position
    params: dict[str, float]

    def __post_init__(self):
        if set(self.params) != set(PARAMETER_NAMES):
            missing = set(PARAMETER_NAMES) - set(self.params)
            extra = set(self.params) - set(PARAMETER_NAMES)
            raise FormatError(
                f"row for {self.subject_id!r}: wrong parameter set"
                f" (missing {sorted(missing)}, extra {sorted(extra)})"
            )
        ctx = f"row ({self.subject_id!r}, {self.position.value})"
        for name, value in self.params.items():
            if not (isinstance(value, (int, float)) and math.isfinite(value)):
                raise FormatError(f"{ctx}: {name} is not finite")
        for name in ("HR", "RMSSD", "RR"):
            if self.params[name] <= 0:
                raise FormatError(f"{ctx}: {name} must be positive")
        for name in _CV_NAMES:
            if self.params[name] < 0:
                raise FormatError(f"{ctx}: {name} must be nonnegative")
        if not 0.0 <= self.params["BR"] <= 100.0:
            raise FormatError(f"{ctx}: BR out of [0, 100]")


@dataclass(frozen=True)
class ParameterTable:
    rows: tuple[ParameterRow, ...]

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        seen = set()
        for row in self.rows:
            key = (row.subject_id, row.position)
            if key in seen:
                raise FormatError(
                    f"duplicate (subject, position) key ({row.subject_id!r},"
                    f" {row.position.value})"
                )
            seen.add(key)

    def subjects(self, position: Position) -> list[str]:
        return sorted(r.subject_id for r in self.rows if r.position == position)

    def row(self, subject_id: str, position: Position) -> ParameterRow:
        for r in self.rows:
            if r.subject_id == subject_id and r.position == position:
                return r
        raise KeyError((subject_id, position))

    def column(self, name: str, position: Position) -> np.ndarray:
        """Values of one parameter for one position, in sorted subject order."""
        if name not in PARAMETER_NAMES:
            raise KeyError(name)
        return np.array(
            [self.row(s, position).params[name] for s in self.subjects(position)]
        )

    def matrix(self, position: Position, names=PARAMETER_NAMES) -> np.ndarray:
        """Design matrix for one position: subjects (sorted) by parameters."""
        subjects = self.subjects(position)
        return np.array(
            [[self.row(s, position).params[name] for name in names] for s in subjects]
        )

    def paired_columns(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        """Supine and standing values for subjects present in both positions."""
        common = sorted(
            set(self.subjects(Position.SUPINE)) & set(self.subjects(Position.STANDING))
        )
        supine = np.array([self.row(s, Position.SUPINE).params[name] for s in common])
        standing = np.array([self.row(s, Position.STANDING).params[name] for s in common])
        return supine, standing


def load_signal_record(
    path, subject_id: str | None = None, position: Position | None = None
) -> SignalRecord:
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"no such file: {path}")
    if subject_id is None or position is None:
        stem = path.stem
        if "_" not in stem:
            raise FormatError(
                f"cannot infer subject/position from file name {path.name!r};"
                " expected <subject_id>_<position>.csv"
            )
        sid, _, pos_text = stem.rpartition("_")
        subject_id = subject_id if subject_id is not None else sid
        position = position if position is not None else Position.parse(pos_text)

    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        if [h.strip() for h in header] != ["t", "ecg", "ip"]:
            raise FormatError(f"{path}: malformed header {header!r}; expected t,ecg,ip")
        t, ecg, ip = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise FormatError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            if row[1].strip() == "" or row[2].strip() == "":
                raise FormatError(f"{path}:{lineno}: channel length mismatch (empty cell)")
            ctx = f"{path}:{lineno}"
            t.append(_parse_decimal(row[0], ctx))
            ecg.append(_parse_decimal(row[1], ctx))
            ip.append(_parse_decimal(row[2], ctx))

    t = np.asarray(t)
    if t.size < 2:
        raise FormatError(f"{path}: too few samples")
    dt = np.diff(t)
    if np.any(dt <= 0):
        raise FormatError(f"{path}: time column not strictly increasing")
    dt_med = float(np.median(dt))
    if np.any(np.abs(dt - dt_med) > 0.01 * dt_med):
        raise FormatError(f"{path}: non-uniform sampling (jitter beyond 1%)")
    return SignalRecord(
        subject_id=subject_id,
        position=position,
        sample_rate_hz=1.0 / dt_med,
        ecg=np.asarray(ecg),
        ip=np.asarray(ip),
    )


def save_signal_record(record: SignalRecord, path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write("t,ecg,ip\n")
        for i in range(record.ecg.size):
            t = i / record.sample_rate_hz
            fh.write(f"{t!r},{float(record.ecg[i])!r},{float(record.ip[i])!r}\n")


def load_parameter_table(path) -> ParameterTable:
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        required = {"subject_id", "position", *PARAMETER_NAMES}
        if len(header) != len(set(header)):
            raise FormatError(f"{path}: duplicate column in header")
        extra = set(header) - required
        if extra:
            raise FormatError(f"{path}: unknown column(s) {sorted(extra)}")
        missing = required - set(header)
        if missing:
            raise FormatError(f"{path}: missing column(s) {sorted(missing)}")
        col = {name: header.index(name) for name in header}

        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise FormatError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            if any(cell.strip() == "" for cell in row):
                raise FormatError(f"{path}:{lineno}: missing value; row rejected")
            params = {
                name: _parse_decimal(row[col[name]], f"{path}:{lineno}")
                for name in PARAMETER_NAMES
            }
            rows.append(
                ParameterRow(
                    subject_id=row[col["subject_id"]].strip(),
                    position=Position.parse(row[col["position"]]),
                    params=params,
                )
            )
    return ParameterTable(tuple(rows))


def save_parameter_table(table: ParameterTable, path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write("subject_id,position," + ",".join(PARAMETER_NAMES) + "\n")
        for row in table.rows:
            values = ",".join(repr(float(row.params[name])) for name in PARAMETER_NAMES)
            fh.write(f"{row.subject_id},{row.position.value},{values}\n")
