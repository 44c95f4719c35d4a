"""scikit-learn style wrappers around the solver and the TAS metrics.

``PoissonFEM`` is fitted on a resolution and predicts the discrete field at
points; ``TasTransformer`` maps (N, err, T) rows to derived TAS columns.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errnorm import l2_error
from .fem import assemble, build_space, mms_case
from .linsolve import pcg
from .meshgen import unit_cube, unit_square
from .tascore import BenchmarkRecord, fit_slope

TAS_COLUMNS = ("doa", "dos", "doe", "rate", "true_rate")


class PoissonFEM(RegressorMixin, BaseEstimator):
    """Manufactured-solution Poisson solve on the unit square or cube.

    ``fit(n)`` meshes with ``n`` cells per axis, assembles and solves; the
    argument may also be an existing ``Mesh``.  ``predict(X)`` evaluates the
    discrete solution at points of shape (m, d).
    """

    def __init__(self, case="test1", family="CG", degree=1, kind="quadrilateral", rtol=1e-10,
                 precond="jacobi", source="quadrature", error_points=None):
        self.case = case
        self.family = family
        self.degree = degree
        self.kind = kind
        self.rtol = rtol
        self.precond = precond
        self.source = source
        self.error_points = error_points

    def fit(self, X, y=None):
        mesh = X
        if np.isscalar(X):
            n = int(X)
            mesh = unit_cube(n) if self.kind == "hexahedron" else unit_square(n, self.kind)
        case = mms_case(self.case)
        self.space_ = build_space(mesh, self.family, self.degree)
        system = assemble(self.space_, case, self.source)
        self.solve_report_ = pcg(system.matrix, system.rhs, rtol=self.rtol, precond=self.precond)
        self.coeffs_ = system.expand(self.solve_report_.solution)
        self.l2_error_ = l2_error(self.space_, self.coeffs_, case.exact, quad_points=self.error_points)
        self.n_dofs_ = self.space_.n_dofs
        self.n_features_in_ = mesh.dim
        return self

    def predict(self, X):
        check_is_fitted(self, "coeffs_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} coordinates per point, got {X.shape[1]}")
        if np.any((X < 0) | (X > 1)):
            raise ValueError("points must lie in the unit domain")
        return self.space_.evaluate(self.coeffs_, X)


def _rows(X):
    """(N, err, T) rows from records or a 3-column array."""
    X = list(X) if not hasattr(X, "shape") else X
    if len(X) and isinstance(X[0], BenchmarkRecord):
        X = [[r.n_dofs, r.l2_error, r.time_seconds] for r in X]
    X = check_array(X, dtype=float)
    if X.shape[1] != 3:
        raise ValueError("expected columns (n_dofs, l2_error, time_seconds)")
    if np.any(X[:, 1] <= 0) or np.any(X[:, 2] <= 0):
        raise ValueError("l2_error and time_seconds must be positive")
    return X


class TasTransformer(TransformerMixin, BaseEstimator):
    """Derived TAS columns for (N, err, T) rows.

    ``transform`` returns columns ``TAS_COLUMNS``; DoA, DoS and the true rate
    are NaN where err >= 1 or N <= 1.  ``fit`` stores the DoA-vs-DoS slope,
    optionally over the ``finest_k`` largest problems.
    """

    def __init__(self, finest_k=None):
        self.finest_k = finest_k

    def fit(self, X, y=None):
        Z = self._derive(_rows(X))
        order = np.argsort(_rows(X)[:, 0], kind="stable")
        Z = Z[order]
        ok = ~np.isnan(Z[:, 0])
        self.convergence_slope_ = fit_slope(Z[ok, 1], Z[ok, 0], self.finest_k)
        self.n_features_in_ = 3
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        return self._derive(_rows(X))

    @staticmethod
    def _derive(X):
        N, err, T = X.T
        with np.errstate(divide="ignore", invalid="ignore"):
            valid = (err < 1) & (N > 1)
            doa = np.where(valid, -np.log10(err), np.nan)
            dos = np.where(valid, np.log10(N), np.nan)
            doe = -np.log10(err * T)
            rate = N / T
            true_rate = doa / dos * rate
        return np.column_stack([doa, dos, doe, rate, true_rate])

    def get_feature_names_out(self, input_features=None):
        return np.array(TAS_COLUMNS, dtype=object)
