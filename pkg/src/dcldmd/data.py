"""Snapshot sets, trajectory records and their CSV persistence.

Snapshot CSV layout::

    n,<n>,m,<m>
    x1,...,xn,u1,...,um,y1,...,yn
    <one snapshot per row, 17 significant digits>

Trajectory CSV layout: ``k,time`` followed by one block of ``n`` columns per
series, named ``x_<label>_<i>`` (``true``, ``pred``, ``base``, ...).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class SnapshotFormatError(ValueError):
    """Malformed snapshot or trajectory file."""


@dataclass
class SnapshotSet:
    """Training triples ``(x_k, u_k, y_k)`` stored column-wise.

    ``X`` and ``Y`` are ``(n, M)``, ``U`` is ``(m, M)``. Construction does not
    validate; call :func:`validate` or :meth:`check`.
    """

    X: np.ndarray
    U: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.U = np.atleast_2d(np.asarray(self.U, dtype=float))
        self.Y = np.atleast_2d(np.asarray(self.Y, dtype=float))

    @classmethod
    def from_rows(cls, X, U, Y):
        """Build from sample-major arrays shaped ``(M, n)``, ``(M, m)``, ``(M, n)``."""
        X = np.asarray(X, dtype=float)
        U = np.asarray(U, dtype=float)
        Y = np.asarray(Y, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if U.ndim == 1:
            U = U[:, None]
        if Y.ndim == 1:
            Y = Y[:, None]
        return cls(X.T, U.T, Y.T)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def m(self):
        return self.U.shape[0]

    @property
    def M(self):
        return self.X.shape[1]

    def check(self):
        """Raise ``ValueError`` listing every violated invariant."""
        problems = validate(self)
        if problems:
            raise ValueError("invalid snapshot set: " + "; ".join(problems))
        return self

    def __eq__(self, other):
        if not isinstance(other, SnapshotSet):
            return NotImplemented
        return (
            np.array_equal(self.X, other.X)
            and np.array_equal(self.U, other.U)
            and np.array_equal(self.Y, other.Y)
        )


def validate(s):
    """Return the list of invariant violations of ``s`` (empty when valid)."""
    problems = []
    for name in ("X", "U", "Y"):
        arr = getattr(s, name)
        if arr.ndim != 2:
            problems.append(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if problems:
        return problems
    cols = {name: getattr(s, name).shape[1] for name in ("X", "U", "Y")}
    if len(set(cols.values())) > 1:
        detail = ", ".join(f"{k} has {v}" for k, v in cols.items())
        problems.append(f"column count mismatch: {detail}")
    if s.X.shape[0] != s.Y.shape[0]:
        problems.append(f"state dimension mismatch: X has {s.X.shape[0]} rows, Y has {s.Y.shape[0]}")
    if min(cols.values()) < 1:
        problems.append("no snapshots (M must be >= 1)")
    if s.X.shape[0] < 1:
        problems.append("state dimension n must be >= 1")
    if s.U.shape[0] < 1:
        problems.append("input dimension m must be >= 1")
    for name in ("X", "U", "Y"):
        arr = getattr(s, name)
        bad = np.argwhere(~np.isfinite(arr))
        if bad.size:
            r, c = bad[0]
            problems.append(
                f"non-finite entry in {name} ({len(bad)} total, first at row {r}, snapshot {c})"
            )
    return problems


def _fmt(v):
    return format(float(v), ".17g")


def save_snapshots(s, path):
    """Write ``s`` as snapshot CSV with full double precision."""
    s.check()
    n, m = s.n, s.m
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", n, "m", m])
        w.writerow(
            [f"x{i + 1}" for i in range(n)]
            + [f"u{i + 1}" for i in range(m)]
            + [f"y{i + 1}" for i in range(n)]
        )
        rows = np.vstack([s.X, s.U, s.Y]).T
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def _parse_float(text, lineno, col):
    try:
        return float(text)
    except ValueError:
        raise SnapshotFormatError(
            f"line {lineno}, column {col}: cannot parse {text!r} as a number"
        ) from None


def load_snapshots(path):
    """Read a snapshot CSV written by :func:`save_snapshots`."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SnapshotFormatError(f"{path}: no snapshots (empty file)")
    head = [c.strip() for c in rows[0]]
    if len(head) != 4 or head[0] != "n" or head[2] != "m":
        raise SnapshotFormatError(f"{path}: line 1: expected header 'n,<n>,m,<m>', got {rows[0]!r}")
    try:
        n, m = int(head[1]), int(head[3])
    except ValueError:
        raise SnapshotFormatError(f"{path}: line 1: dimensions must be integers") from None
    if n < 1 or m < 1:
        raise SnapshotFormatError(f"{path}: line 1: dimensions must be >= 1")
    width = 2 * n + m
    if len(rows) < 2:
        raise SnapshotFormatError(f"{path}: missing column-name line")
    if len(rows[1]) != width:
        raise SnapshotFormatError(
            f"{path}: line 2: header declares n={n}, m={m} ({width} columns) "
            f"but column-name line has {len(rows[1])}"
        )
    data = []
    for lineno, row in enumerate(rows[2:], start=3):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != width:
            raise SnapshotFormatError(
                f"{path}: line {lineno}: expected {width} columns, got {len(row)}"
            )
        data.append([_parse_float(c, lineno, j + 1) for j, c in enumerate(row)])
    if not data:
        raise SnapshotFormatError(f"{path}: no snapshots")
    arr = np.array(data).T
    s = SnapshotSet(arr[:n], arr[n : n + m], arr[n + m :])
    problems = validate(s)
    if problems:
        raise SnapshotFormatError(f"{path}: " + "; ".join(problems))
    return s


@dataclass
class TrajectoryRecord:
    """One time step of a trajectory; ``predicted`` maps a predictor label to a state."""

    k: int
    time: float
    state: np.ndarray
    predicted: dict = field(default_factory=dict)


def records_to_array(records):
    """Stack the ``state`` of each record into a ``(len, n)`` array."""
    return np.array([r.state for r in records], dtype=float)


def save_trajectories(path, dt, series):
    """Write aligned trajectories as CSV.

    Parameters
    ----------
    path : path-like
    dt : float
        Step size; row ``k`` gets ``time = k * dt``.
    series : dict
        Maps labels (``"true"``, ``"pred"``, ``"base"``, ...) to ``(steps+1, n)``
        arrays. Shorter arrays (truncated rollouts) are padded with ``nan``.
    """
    arrays = {label: np.atleast_2d(np.asarray(a, dtype=float)) for label, a in series.items()}
    if not arrays:
        raise ValueError("no series to write")
    length = max(a.shape[0] for a in arrays.values())
    header = ["k", "time"]
    blocks = []
    for label, a in arrays.items():
        header += [f"x_{label}_{i + 1}" for i in range(a.shape[1])]
        pad = np.full((length - a.shape[0], a.shape[1]), np.nan)
        blocks.append(np.vstack([a, pad]))
    table = np.hstack(blocks)
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for k in range(length):
            w.writerow([k, _fmt(k * dt)] + [_fmt(v) for v in table[k]])
    return path


def load_trajectories(path):
    """Read a trajectory CSV; returns ``(k, time, series)`` with ``series`` as in
    :func:`save_trajectories`."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SnapshotFormatError(f"{path}: empty trajectory file")
    header = rows[0]
    if header[:2] != ["k", "time"]:
        raise SnapshotFormatError(f"{path}: line 1: expected leading columns 'k,time'")
    body = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise SnapshotFormatError(
                f"{path}: line {lineno}: expected {len(header)} columns, got {len(row)}"
            )
        body.append([_parse_float(c, lineno, j + 1) for j, c in enumerate(row)])
    table = np.array(body, dtype=float).reshape(len(body), len(header))
    series = {}
    for j, name in enumerate(header[2:], start=2):
        _, label, _idx = name.rsplit("_", 2) if name.count("_") >= 2 else (None, name, None)
        series.setdefault(label, []).append(table[:, j])
    series = {label: np.column_stack(cols) for label, cols in series.items()}
    return table[:, 0].astype(int), table[:, 1], series
