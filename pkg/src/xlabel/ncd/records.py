"""Raw check-up records and their CSV form.

One CSV row per record, UTF-8, missing lab = empty cell, diagnosis codes and
drugs joined by ';'. Optional ``<task>_label`` columns carry existing labels
(empty cell = unlabeled). The writer is bit-stable: fixed column order and
repr-based float formatting, so identical data exports byte-identically.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from xlabel.errors import InvalidInput
from xlabel.ncd.tasks import Task

LAB_NAMES = ("Glucose", "HbA1c", "eGFR", "sbp1", "dbp1", "LDL-c")

CSV_COLUMNS = ("id", "age", "sex", "height", "weight", *LAB_NAMES,
               "icd10_codes", "drugs", "note",
               *(f"{t.value}_label" for t in Task))

UNLABELED = -1


@dataclass(frozen=True)
class RawRecord:
    id: str
    age: float
    sex: str
    height: float
    weight: float
    labs: dict[str, float] = field(default_factory=dict)
    icd10_codes: tuple[str, ...] = ()
    drugs: tuple[str, ...] = ()
    note: str = ""

    def __post_init__(self):
        for name, value in self.labs.items():
            if name not in LAB_NAMES:
                raise InvalidInput(f"unknown lab {name!r} on record {self.id}")
            if value < 0:
                raise InvalidInput(f"negative lab {name}={value} on record {self.id}")

    def lab(self, name: str) -> float:
        """Lab value, NaN when the record does not carry it."""
        return self.labs.get(name, float("nan"))


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if np.isnan(value):
            return ""
        return repr(value)
    return str(value)


def write_csv(records, labels=None, fh=None) -> str | None:
    """Write records (and optional per-task label arrays) as CSV.

    ``labels`` maps Task -> int array where -1 means unlabeled. Returns the
    document as a string when ``fh`` is None.
    """
    labels = labels or {}
    buffer = fh or io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for i, r in enumerate(records):
        row = [r.id, _fmt(r.age), r.sex, _fmt(r.height), _fmt(r.weight)]
        row += [_fmt(r.labs.get(name)) for name in LAB_NAMES]
        row += [";".join(r.icd10_codes), ";".join(r.drugs), r.note]
        for task in Task:
            col = labels.get(task)
            v = UNLABELED if col is None else int(col[i])
            row.append("" if v == UNLABELED else str(v))
        writer.writerow(row)
    if fh is None:
        return buffer.getvalue()
    return None


def _parse_float(cell: str, column: str, rownum: int) -> float:
    cell = cell.strip()
    if not cell:
        return float("nan")
    try:
        return float(cell)
    except ValueError:
        raise InvalidInput(f"row {rownum}, column {column!r}: "
                           f"expected a number, got {cell!r}") from None


def read_csv(text_or_fh):
    """Parse CSV into (records, labels) where labels maps Task -> int8 array
    (-1 = unlabeled). Raises InvalidInput with row/column diagnostics."""
    fh = io.StringIO(text_or_fh) if isinstance(text_or_fh, str) else text_or_fh
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise InvalidInput("empty CSV document") from None
    required = CSV_COLUMNS[:CSV_COLUMNS.index("note") + 1]
    missing = [c for c in required if c not in header]
    if missing:
        raise InvalidInput(f"missing required columns: {', '.join(missing)}")
    col = {name: header.index(name) for name in header}

    records: list[RawRecord] = []
    label_cols: dict[Task, list[int]] = {t: [] for t in Task}
    seen_ids: set[str] = set()
    for rownum, row in enumerate(reader, start=2):
        if len(row) != len(header):
            raise InvalidInput(f"row {rownum}: expected {len(header)} cells, got {len(row)}")
        rid = row[col["id"]].strip()
        if not rid:
            raise InvalidInput(f"row {rownum}, column 'id': must not be empty")
        if rid in seen_ids:
            raise InvalidInput(f"row {rownum}, column 'id': duplicate id {rid!r}")
        seen_ids.add(rid)
        labs = {}
        for name in LAB_NAMES:
            value = _parse_float(row[col[name]], name, rownum)
            if not np.isnan(value):
                if value < 0:
                    raise InvalidInput(f"row {rownum}, column {name!r}: negative lab value")
                labs[name] = value
        codes = tuple(c.strip() for c in row[col["icd10_codes"]].split(";") if c.strip())
        drugs = tuple(d.strip() for d in row[col["drugs"]].split(";") if d.strip())
        records.append(RawRecord(
            id=rid,
            age=_parse_float(row[col["age"]], "age", rownum),
            sex=row[col["sex"]].strip(),
            height=_parse_float(row[col["height"]], "height", rownum),
            weight=_parse_float(row[col["weight"]], "weight", rownum),
            labs=labs,
            icd10_codes=codes,
            drugs=drugs,
            note=row[col["note"]],
        ))
        for task in Task:
            name = f"{task.value}_label"
            if name not in col:
                label_cols[task].append(UNLABELED)
                continue
            cell = row[col[name]].strip()
            if not cell:
                label_cols[task].append(UNLABELED)
            elif cell in ("0", "1"):
                label_cols[task].append(int(cell))
            else:
                raise InvalidInput(f"row {rownum}, column {name!r}: "
                                   f"labels must be 0 or 1, got {cell!r}")
    if not records:
        raise InvalidInput("CSV contains a header but no records")
    labels = {t: np.asarray(v, dtype=np.int8) for t, v in label_cols.items()}
    return records, labels
