"""Delimited-file ingestion and JSON persistence.

Covariate indices are 1-based in every file written or printed (matching
the way gene numbers are usually quoted) and 0-based inside the library.
Reals are serialized with Python's shortest-roundtrip repr, so every
double survives a save/load cycle bit-exactly.
"""

from __future__ import annotations

import csv
import json
import os
import warnings
from dataclasses import dataclass
from typing import Any

import numpy as np

from .engine import Dataset, make_dataset
from .lsq import Rule, SelectionTrace, Step, StopReason
from .simulate import MetricsReport

__all__ = [
    "TableSource",
    "load",
    "load_report",
    "load_trace",
    "save_report",
    "save_trace",
    "trace_from_dict",
    "trace_to_dict",
]


@dataclass(frozen=True)
class TableSource:
    """Where and how to read a (response, covariates) table.

    ``response_column`` may be a 1-based column number, a header name, the
    path of a separate single-column file, or None when every column is a
    variable (graph construction).  ``transpose`` handles files stored as
    variables-by-samples, which is common for gene-expression matrices;
    the response column is resolved after transposition.
    """

    path: str
    delimiter: str = ","
    response_column: int | str | None = 1
    header: bool = False
    transpose: bool = False


class ParseError(ValueError):
    """Malformed input file; the message names the offending cell."""


def _read_matrix(path: str, delimiter: str, header: bool) -> tuple[np.ndarray, list[str] | None]:
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    rows: list[list[float]] = []
    names: list[str] | None = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        width = None
        for lineno, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if header and names is None:
                names = [c.strip() for c in row]
                width = len(names)
                continue
            if width is None:
                width = len(row)
            if len(row) != width:
                raise ParseError(
                    f"{path}:{lineno}: expected {width} fields, found {len(row)}")
            vals = []
            for col, cell in enumerate(row, start=1):
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(
                        f"{path}:{lineno}: column {col}: non-numeric cell {cell!r}") from None
                if not np.isfinite(v):
                    raise ParseError(
                        f"{path}:{lineno}: column {col}: non-finite cell {cell!r}")
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return np.array(rows, dtype=float), names


def _read_vector(path: str, delimiter: str) -> np.ndarray:
    mat, _ = _read_matrix(path, delimiter, header=False)
    if mat.shape[1] != 1 and mat.shape[0] != 1:
        raise ParseError(f"{path}: response file must hold a single column or row")
    return mat.reshape(-1)


def load(src: TableSource) -> tuple[Dataset, np.ndarray | None]:
    """Read a table into a Dataset plus optional integer labels.

    Labels are returned (as the response itself) when the response is
    integer-valued, for classification reporting; otherwise None.
    """
    mat, names = _read_matrix(src.path, src.delimiter, src.header)
    if src.transpose:
        mat = mat.T
        names = None  # header named the pre-transpose columns

    rc = src.response_column
    if rc is None:
        y = np.zeros(mat.shape[0])
        x = mat
        colnames = names
    elif isinstance(rc, str) and names is not None and rc in names:
        pos = names.index(rc)
        y = mat[:, pos]
        x = np.delete(mat, pos, axis=1)
        colnames = [c for i, c in enumerate(names) if i != pos]
    elif isinstance(rc, str) and os.path.exists(rc):
        y = _read_vector(rc, src.delimiter)
        if y.shape[0] != mat.shape[0]:
            raise ParseError(
                f"response length {y.shape[0]} does not match {mat.shape[0]} rows")
        x = mat
        colnames = names
    elif isinstance(rc, int):
        if not (1 <= rc <= mat.shape[1]):
            raise ParseError(f"response column {rc} outside 1..{mat.shape[1]}")
        pos = rc - 1
        y = mat[:, pos]
        x = np.delete(mat, pos, axis=1)
        colnames = [c for i, c in enumerate(names) if i != pos] if names else None
    else:
        raise ParseError(f"cannot resolve response column {rc!r}")

    if x.shape[1] < 1:
        raise ParseError("no covariate columns remain after extracting the response")
    const = np.all(x == x[0, :], axis=0)
    if np.any(const):
        flagged = [int(i) + 1 for i in np.nonzero(const)[0]]
        warnings.warn(f"constant covariate columns (1-based): {flagged}", RuntimeWarning)
    d = make_dataset(y, x, names=colnames)
    labels = y if np.all(y == np.round(y)) else None
    return d, labels


# ---------------------------------------------------------------------------
# Trace and report serialization


def _step_to_dict(s: Step) -> dict[str, Any]:
    return {"index": s.index + 1, "ss": s.ss, "p_value": s.p_value}


def _step_from_dict(d: dict[str, Any]) -> Step:
    return Step(int(d["index"]) - 1, float(d["ss"]), float(d["p_value"]))


def trace_to_dict(t: SelectionTrace) -> dict[str, Any]:
    return {
        "schema": "selection-trace/1",
        "method": t.method,
        "n": t.n,
        "q": t.q,
        "alpha": t.alpha,
        "rule": t.rule.value,
        "initial_ss": t.initial_ss,
        "steps": [_step_to_dict(s) for s in t.steps],
        "joint_relevance": t.joint_relevance,
        "stop_reason": t.stop_reason.value,
        "stop_candidate": None if t.stop_candidate is None else _step_to_dict(t.stop_candidate),
        "extra": t.extra,
    }


def trace_from_dict(d: dict[str, Any]) -> SelectionTrace:
    return SelectionTrace(
        steps=tuple(_step_from_dict(s) for s in d["steps"]),
        joint_relevance=float(d["joint_relevance"]),
        stop_reason=StopReason(d["stop_reason"]),
        stop_candidate=None if d["stop_candidate"] is None else _step_from_dict(d["stop_candidate"]),
        method=str(d["method"]),
        n=int(d["n"]),
        q=int(d["q"]),
        alpha=float(d["alpha"]),
        rule=Rule(d["rule"]),
        initial_ss=float(d["initial_ss"]),
        extra=d.get("extra"),
    )


def _dump(obj: dict[str, Any], path: str) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def save_trace(trace: SelectionTrace, path: str) -> None:
    _dump(trace_to_dict(trace), path)


def load_trace(path: str) -> SelectionTrace:
    with open(path) as fh:
        return trace_from_dict(json.load(fh))


def report_to_dict(r: MetricsReport) -> dict[str, Any]:
    return {
        "schema": "metrics-report/1",
        "procedure": r.procedure,
        "scenario": r.scenario,
        "alpha": r.alpha,
        "replications": r.replications,
        "power": r.power,
        "fwer": r.fwer,
        "false_pos_mean": r.false_pos_mean,
        "false_neg_mean": r.false_neg_mean,
        "false_discovery_mean": r.false_discovery_mean,
        "correct_discovery_mean": r.correct_discovery_mean,
        "avgcov_s0": r.avgcov_s0,
        "avglen_s0": r.avglen_s0,
        "avgcov_s0c": r.avgcov_s0c,
        "avglen_s0c": r.avglen_s0c,
        "records": list(r.records),
        "failures": list(r.failures),
    }


def report_from_dict(d: dict[str, Any]) -> MetricsReport:
    return MetricsReport(
        procedure=str(d["procedure"]),
        scenario=dict(d["scenario"]),
        alpha=float(d["alpha"]),
        replications=int(d["replications"]),
        power=d["power"],
        fwer=d["fwer"],
        false_pos_mean=float(d["false_pos_mean"]),
        false_neg_mean=float(d["false_neg_mean"]),
        false_discovery_mean=float(d["false_discovery_mean"]),
        correct_discovery_mean=float(d["correct_discovery_mean"]),
        avgcov_s0=d["avgcov_s0"],
        avglen_s0=d["avglen_s0"],
        avgcov_s0c=d["avgcov_s0c"],
        avglen_s0c=d["avglen_s0c"],
        records=tuple(dict(rec) for rec in d["records"]),
        failures=tuple(dict(rec) for rec in d.get("failures", [])),
    )


def save_report(report: MetricsReport, path: str) -> None:
    _dump(report_to_dict(report), path)


def load_report(path: str) -> MetricsReport:
    with open(path) as fh:
        return report_from_dict(json.load(fh))
