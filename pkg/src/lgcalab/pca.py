"""Karhunen-Loeve / principal component machinery and CA rule-space analysis.

Data matrices hold observations in rows and variables in columns.  Columns
are centered, given the diagonal norm 1/S_j^2, and the resulting correlation
matrix is diagonalized with a cyclic Jacobi sweep.  Constant columns (zero
variance) get weight zero, which leaves exact zero rows/columns in the
correlation matrix instead of a division by zero; for the 256-rule table
this is what makes the trace come out as 254.

The truncated-reconstruction error J_m is normalized by the number of
observations, so it equals the sum of the discarded eigenvalues of the
covariance operator R = (1/n) X^T X.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eca import build_pattern_table
from .errors import NumericalError

_CENTER_TOL = 1e-12


@dataclass(frozen=True)
class DataMatrix:
    """n x p matrix of observations (rows) by variables (columns)."""

    values: np.ndarray
    centered: bool = False

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("data matrix must be 2-d")
        if self.centered and values.size:
            worst = np.abs(values.mean(axis=0)).max()
            if worst > _CENTER_TOL:
                raise ValueError(f"matrix flagged centered has column mean {worst:.3g}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


def center(f: DataMatrix) -> DataMatrix:
    """Subtract the column means E_j; idempotent."""
    if f.n < 1:
        raise ValueError("cannot center an empty matrix")
    x = f.values - f.values.mean(axis=0)
    # kill the residual rounding so the centered invariant holds exactly enough
    x -= x.mean(axis=0)
    return DataMatrix(x, centered=True)


def column_variances(x: DataMatrix) -> np.ndarray:
    """S_j^2 = (1/n) sum_i x_ij^2 of a centered matrix."""
    if not x.centered:
        raise ValueError("column variances are defined on the centered matrix")
    return (x.values**2).mean(axis=0)


@dataclass(frozen=True)
class NormMatrix:
    """Diagonal norm with weights 1/S_j^2; zero-variance columns are masked."""

    weights: np.ndarray  # 1/S_j^2, 0 on the mask
    zero_variance_mask: np.ndarray  # bool, True where S_j = 0

    @classmethod
    def from_variances(cls, variances) -> "NormMatrix":
        variances = np.asarray(variances, dtype=np.float64)
        mask = variances == 0.0
        weights = np.zeros_like(variances)
        weights[~mask] = 1.0 / variances[~mask]
        return cls(weights, mask)

    def half_weights(self) -> np.ndarray:
        """Diagonal of M^(1/2), i.e. 1/S_j (0 on the mask)."""
        return np.sqrt(self.weights)


def correlation_matrix(x: DataMatrix, norm: NormMatrix) -> np.ndarray:
    """C_jk = (1/n) sum_i x_ij x_ik / (S_j S_k); masked rows/columns are zero."""
    if not x.centered:
        raise ValueError("correlation matrix requires a centered matrix")
    xw = x.values * norm.half_weights()
    c = xw.T @ xw / x.n
    return (c + c.T) / 2.0


@dataclass
class Spectrum:
    """Sorted eigensystem; ``back_mapped`` carries eigenvectors pushed back to
    the original column scale (M^(1/2) a), when a norm was involved."""

    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # orthonormal columns, eigenvectors[:, k] <-> eigenvalues[k]
    back_mapped: np.ndarray | None = None


def eig_sym(
    a: np.ndarray,
    tol: float = 1e-12,
    max_sweeps: int = 64,
    symmetry_tol: float = 1e-10,
) -> Spectrum:
    """Full eigensystem of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps stop once the off-diagonal Frobenius norm drops below
    tol * ||A||_F; running out of sweeps raises NumericalError.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    n = a.shape[0]
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    if np.abs(a - a.T).max(initial=0.0) > symmetry_tol * scale:
        raise ValueError("matrix is not symmetric within tolerance")

    work = (a + a.T) / 2.0
    vecs = np.eye(n)
    norm = float(np.linalg.norm(work))
    if n == 1 or norm == 0.0:
        return _sorted_spectrum(np.diag(work).copy(), vecs)

    def offdiag_norm() -> float:
        od = work - np.diag(np.diag(work))
        return float(np.linalg.norm(od))

    # rotations this small cannot push the off-diagonal norm back above the
    # stopping threshold even if every pair is skipped
    skip = 0.1 * tol * norm / n
    for _ in range(max_sweeps):
        if offdiag_norm() <= tol * norm:
            return _sorted_spectrum(np.diag(work).copy(), vecs)
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = work[p, q]
                if abs(apq) <= skip:
                    continue
                tau = (work[q, q] - work[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c

                col_p = work[:, p].copy()
                col_q = work[:, q].copy()
                work[:, p] = c * col_p - s * col_q
                work[:, q] = s * col_p + c * col_q
                row_p = work[p, :].copy()
                row_q = work[q, :].copy()
                work[p, :] = c * row_p - s * row_q
                work[q, :] = s * row_p + c * row_q
                work[p, q] = 0.0
                work[q, p] = 0.0

                col_p = vecs[:, p].copy()
                col_q = vecs[:, q].copy()
                vecs[:, p] = c * col_p - s * col_q
                vecs[:, q] = s * col_p + c * col_q
    off = offdiag_norm()
    if off <= tol * norm:
        return _sorted_spectrum(np.diag(work).copy(), vecs)
    raise NumericalError(
        f"Jacobi eigensolver did not converge in {max_sweeps} sweeps "
        f"(off-diagonal norm {off:.3e}, target {tol * norm:.3e})"
    )


def _sorted_spectrum(eigenvalues: np.ndarray, eigenvectors: np.ndarray) -> Spectrum:
    order = np.argsort(eigenvalues)[::-1]
    return Spectrum(eigenvalues[order], np.ascontiguousarray(eigenvectors[:, order]))


def kl_error(x: DataMatrix, m: int) -> float:
    """Mean-square reconstruction error after keeping m principal components.

    J_m = (1/n) sum_j ||x_j - Phi_m Phi_m^T x_j||^2, which equals the sum of
    the trailing eigenvalues of R = (1/n) X^T X.
    """
    if not 0 <= m <= x.p:
        raise ValueError("retained component count must lie in [0, p]")
    xc = x if x.centered else center(x)
    r = xc.values.T @ xc.values / xc.n
    spectrum = eig_sym(r)
    phi = spectrum.eigenvectors[:, :m]
    residual = xc.values - (xc.values @ phi) @ phi.T
    return float((residual**2).sum() / xc.n)


def analyze_rulespace(l: int) -> Spectrum:
    """Spectrum of the 256 x 256 correlation matrix of the rule-response table.

    Builds the pattern table at length l, centers it, normalizes columns by
    their standard deviation (constant columns -> zero) and diagonalizes.
    """
    if not 3 <= l <= 12:
        raise ValueError("pattern length l must lie in [3, 12]")
    table = build_pattern_table(l)
    x = center(DataMatrix(table.entries.astype(np.float64)))
    norm = NormMatrix.from_variances(column_variances(x))
    c = correlation_matrix(x, norm)
    spectrum = eig_sym(c)
    spectrum.back_mapped = norm.half_weights()[:, None] * spectrum.eigenvectors
    return spectrum
