"""Time-Accuracy-Size metrics: efficacy, static scaling and the model curves.

A ``BenchmarkRecord`` is one measured (size, error, time) observation.  Records
sharing a method are collected into a ``TasSeries`` whose derived columns are
digits of accuracy (DoA), size (DoS) and efficacy (DoE), the rate N/T and the
accuracy-weighted rate (DoA/DoS)(N/T).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errnorm import doa as _doa, dos as _dos
from .exceptions import DomainError, GroupingError

FAMILIES = ("CG", "DG", "other")
DEFAULT_FINEST_K = 3


class RecordInvariantError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class BenchmarkRecord:
    label: str
    family: str
    degree: int
    dim: int
    h: float
    n_dofs: int
    l2_error: float
    time_seconds: float
    n_procs: int = 1
    extra: dict = field(default_factory=dict, compare=True, hash=False)

    def __post_init__(self):
        problems = self.problems(
            {
                "label": self.label,
                "family": self.family,
                "degree": self.degree,
                "dim": self.dim,
                "h": self.h,
                "n_dofs": self.n_dofs,
                "l2_error": self.l2_error,
                "time_seconds": self.time_seconds,
                "n_procs": self.n_procs,
            }
        )
        if problems:
            raise RecordInvariantError(problems)

    @staticmethod
    def problems(fields: dict) -> list:
        """Invariant violations for raw field values, as readable messages."""
        out = []
        if not isinstance(fields.get("label"), str) or not fields["label"]:
            out.append("label must be a nonempty string")
        if fields.get("family") not in FAMILIES:
            out.append(f"family must be one of {FAMILIES}")
        for name in ("degree", "dim", "n_dofs", "n_procs"):
            v = fields.get(name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                out.append(f"{name} must be an integer")
        for name in ("h", "l2_error", "time_seconds"):
            v = fields.get(name)
            if isinstance(v, bool) or not isinstance(v, (int, float, np.floating, np.integer)):
                out.append(f"{name} must be a number")
            elif not math.isfinite(v):
                out.append(f"{name} must be finite")
        if out:
            return out
        if fields["degree"] < 0:
            out.append("degree must be >= 0")
        if fields["dim"] not in (1, 2, 3):
            out.append("dim must be 1, 2 or 3")
        if fields["n_dofs"] <= 1:
            out.append("N must be greater than 1")
        if fields["n_procs"] < 1:
            out.append("n_procs must be >= 1")
        if fields["h"] <= 0:
            out.append("h must be positive")
        if fields["l2_error"] <= 0:
            out.append("err must be positive")
        if fields["time_seconds"] <= 0:
            out.append("time must be positive")
        return out

    @property
    def key(self):
        return (self.label, self.family, self.degree, self.dim, self.n_procs)


def doe(err, T):
    """Digits of efficacy, -log10(err * T)."""
    if not (err > 0 and T > 0):
        raise DomainError(f"efficacy needs err > 0 and T > 0, got err={err!r}, T={T!r}", (err, T))
    return -math.log10(err * T)


def true_static_scaling_point(r: BenchmarkRecord) -> float:
    """Accuracy-weighted rate (DoA/DoS) * (N/T)."""
    return _doa(r.l2_error) / _dos(r.n_dofs) * (r.n_dofs / r.time_seconds)


def doe_slope_prediction(alpha, d):
    """Slope of DoE against log10(h) for err = C h^alpha, T = W h^-d."""
    if alpha <= 0 or d not in (1, 2, 3):
        raise ValueError("need alpha > 0 and d in {1, 2, 3}")
    return d - alpha


def fit_slope(x, y, finest_k=None):
    """Ordinary least-squares slope of y on x, optionally over the last k points.

    Returns None when fewer than two points are available.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if finest_k is not None:
        x, y = x[-finest_k:], y[-finest_k:]
    if x.size < 2 or np.ptp(x) == 0:
        return None
    xm, ym = x.mean(), y.mean()
    return float(((x - xm) * (y - ym)).sum() / ((x - xm) ** 2).sum())


@dataclass
class TasSeries:
    """Records of one method ordered by ascending N, with derived columns.

    Columns are numpy arrays aligned with ``records``; entries whose record
    violates err < 1 or N > 1 are NaN in ``doa``, ``dos`` and ``true_rate``
    and listed in ``excluded`` as ``(index, reason)``.
    """

    records: list
    doa: np.ndarray
    dos: np.ndarray
    doe: np.ndarray
    rate: np.ndarray
    true_rate: np.ndarray
    excluded: list
    convergence_slope: float | None
    doe_slope: float | None
    finest_k: int | None = None
    notes: list = field(default_factory=list)

    @property
    def label(self):
        return self.records[0].label

    @property
    def key(self):
        return self.records[0].key

    @property
    def included(self) -> np.ndarray:
        return ~np.isnan(self.doa)

    @property
    def times(self) -> np.ndarray:
        return np.array([r.time_seconds for r in self.records])

    @property
    def n_dofs(self) -> np.ndarray:
        return np.array([r.n_dofs for r in self.records])

    @property
    def predicted_slope(self):
        """alpha/d with alpha = p + 1, for CG/DG records; else None."""
        r = self.records[0]
        if r.family in ("CG", "DG") and r.degree >= 1:
            return (r.degree + 1) / r.dim
        return None


def derive_series(records: Iterable[BenchmarkRecord], finest_k=None) -> TasSeries:
    """Build a TasSeries from records of a single method.

    Slopes are least-squares fits over all included points, or over the
    ``finest_k`` largest problems when given.
    """
    records = list(records)
    if not records:
        raise GroupingError("cannot derive a series from no records")
    keys = {r.key for r in records}
    if len(keys) > 1:
        raise GroupingError(f"records mix several methods: {sorted(map(str, keys))}")
    records = sorted(records, key=lambda r: (r.n_dofs, -r.h, r.l2_error, r.time_seconds))
    n = len(records)
    doa_col = np.full(n, np.nan)
    dos_col = np.full(n, np.nan)
    true_col = np.full(n, np.nan)
    doe_col = np.empty(n)
    rate = np.empty(n)
    excluded = []
    for i, r in enumerate(records):
        rate[i] = r.n_dofs / r.time_seconds
        doe_col[i] = doe(r.l2_error, r.time_seconds)
        try:
            a, s = _doa(r.l2_error), _dos(r.n_dofs)
        except DomainError as exc:
            excluded.append((i, str(exc)))
            continue
        doa_col[i], dos_col[i] = a, s
        true_col[i] = a / s * rate[i]
    ok = ~np.isnan(doa_col)
    notes = []
    conv = fit_slope(dos_col[ok], doa_col[ok], finest_k)
    slope_doe = fit_slope(np.log10([r.time_seconds for r in records]), doe_col, finest_k)
    if conv is None:
        notes.append("not-enough-points")
    return TasSeries(records, doa_col, dos_col, doe_col, rate, true_col, excluded, conv, slope_doe, finest_k, notes)


def group_records(records: Iterable[BenchmarkRecord], finest_k=None) -> list:
    """Split records by (label, family, degree, dim, n_procs) into series."""
    groups: dict = {}
    for r in records:
        groups.setdefault(r.key, []).append(r)
    return [derive_series(groups[k], finest_k) for k in sorted(groups, key=str)]


@dataclass(frozen=True)
class ModelParams:
    """Constants of err = C h^alpha, T = W h^-d, N = D h^-d."""

    C: float = 10.0
    W: float = 0.1
    D: float = 1.0
    alpha: float = 2.0
    d: int = 2
    h_values: Sequence[float] = tuple(1.0 / (10 * 2**k) for k in range(10))

    def __post_init__(self):
        if min(self.C, self.W, self.D, self.alpha) <= 0:
            raise ValueError("C, W, D and alpha must be positive")
        if self.d not in (1, 2, 3):
            raise ValueError("d must be 1, 2 or 3")
        h = np.asarray(self.h_values, dtype=float)
        if h.size == 0 or np.any(h <= 0):
            raise ValueError("h values must be positive")
        if np.any(np.diff(h) >= 0):
            raise ValueError("h values must be strictly decreasing")
        object.__setattr__(self, "h_values", tuple(float(v) for v in h))


def model_curves(params: ModelParams) -> dict:
    """Exact evaluation of the four TAS curves for the model constants.

    Everything is evaluated in log10 space so that tiny h do not overflow.
    Returns ``(x, y)`` point lists for the four diagrams and the underlying
    arrays under ``"columns"``.
    """
    C, W, D, a, d = params.C, params.W, params.D, params.alpha, params.d
    lh = np.log10(np.asarray(params.h_values))
    log_err = math.log10(C) + a * lh
    log_T = math.log10(W) - d * lh
    log_N = math.log10(D) - d * lh
    doa_v = -log_err
    dos_v = log_N
    doe_v = -(log_err + log_T)
    rate = np.full_like(lh, D / W)
    with np.errstate(divide="ignore", invalid="ignore"):
        true_rate = np.where((doa_v > 0) & (dos_v > 0), doa_v / dos_v * rate, np.nan)
    T = 10.0**log_T
    columns = {
        "log10_h": lh,
        "err": 10.0**log_err,
        "time": T,
        "n_dofs": 10.0**log_N,
        "doa": doa_v,
        "dos": dos_v,
        "doe": doe_v,
        "rate": rate,
        "true_rate": true_rate,
    }
    return {
        "mesh_convergence": list(zip(dos_v, doa_v)),
        "static_scaling": list(zip(T, rate)),
        "doe": list(zip(T, doe_v)),
        "true_static_scaling": list(zip(T, true_rate)),
        "columns": columns,
    }


def model_records(params: ModelParams, label=None) -> list:
    """Synthetic BenchmarkRecords sampled from the model curves."""
    curves = model_curves(params)["columns"]
    label = label or f"model a={params.alpha:g} d={params.d}"
    out = []
    for h, err, T, N in zip(params.h_values, curves["err"], curves["time"], curves["n_dofs"]):
        out.append(
            BenchmarkRecord(
                label=label,
                family="other",
                degree=0,
                dim=params.d,
                h=float(h),
                n_dofs=max(2, int(round(N))),
                l2_error=float(err),
                time_seconds=float(T),
                extra={"model_n_dofs": float(N)},
            )
        )
    return out
