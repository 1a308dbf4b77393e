"""P-spline building blocks: B-spline design, difference penalty, centering.

Each smooth uses a cubic B-spline basis on quantile-placed interior knots with
a discrete difference penalty on adjacent coefficients. Identifiability comes
from a sum-to-zero constraint over the observed data, absorbed by
reparameterizing the q basis columns down to q-1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BSpline

from .errors import ValidationError


@dataclass(frozen=True)
class SmoothTerm:
    feature: str
    basis_size: int = 20
    degree: int = 3
    penalty_order: int = 2

    def __post_init__(self):
        if self.basis_size <= self.degree + 1:
            raise ValidationError(
                f"smooth {self.feature!r}: basis_size must exceed degree + 1"
            )
        if self.penalty_order < 1 or self.penalty_order >= self.basis_size:
            raise ValidationError(
                f"smooth {self.feature!r}: invalid penalty order {self.penalty_order}"
            )


def place_knots(x: np.ndarray, basis_size: int, degree: int) -> np.ndarray:
    """Knot vector with interior knots at quantiles of the distinct values.

    Returns basis_size + degree + 1 non-decreasing knots covering
    [min(x), max(x)], with degree+1 repeats at each boundary. Requires at
    least basis_size distinct values in x.
    """
    unique = np.unique(x[np.isfinite(x)])
    if unique.size < basis_size:
        raise ValidationError(
            f"too few distinct values ({unique.size}) for basis size {basis_size}"
        )
    m = basis_size - degree - 1
    # order-statistic placement on the distinct values is robust to ties in x
    idx = np.round(np.arange(1, m + 1) * (unique.size - 1) / (m + 1)).astype(int)
    interior = unique[idx]
    return np.concatenate(
        [np.repeat(unique[0], degree + 1), interior, np.repeat(unique[-1], degree + 1)]
    )


def bspline_design(x: np.ndarray, knots: np.ndarray, degree: int) -> np.ndarray:
    """Dense n x q B-spline design matrix; x is clipped to the knot span."""
    clipped = np.clip(x, knots[0], knots[-1])
    return BSpline.design_matrix(clipped, knots, degree).toarray()


def difference_matrix(size: int, order: int) -> np.ndarray:
    return np.diff(np.eye(size), n=order, axis=0)


def penalty_matrix(size: int, order: int) -> np.ndarray:
    """S = D'D for the given difference order; rank size - order."""
    d = difference_matrix(size, order)
    return d.T @ d


def centering_transform(col_means: np.ndarray) -> np.ndarray:
    """q x (q-1) orthonormal basis of the null space of the column-mean vector.

    Multiplying basis columns by this matrix absorbs the sum-to-zero
    constraint over the observed data.
    """
    c = np.asarray(col_means, dtype=np.float64).reshape(-1, 1)
    if not np.any(c):
        raise ValidationError("degenerate constraint: zero column means")
    q_full, _ = np.linalg.qr(c, mode="complete")
    return q_full[:, 1:]


@dataclass
class SmoothBasis:
    """Constrained design block for one smooth term, built from observed x."""

    term: SmoothTerm
    knots: np.ndarray
    col_means: np.ndarray  # over observed data, pre-constraint
    transform: np.ndarray  # q x (q-1)
    x_min: float
    x_max: float
    design: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_coef(self) -> int:
        return self.term.basis_size - 1

    def penalty(self) -> np.ndarray:
        raw = penalty_matrix(self.term.basis_size, self.term.penalty_order)
        return self.transform.T @ raw @ self.transform

    def design_rows(self, x: np.ndarray) -> np.ndarray:
        """Constrained basis evaluated at new covariate values."""
        return bspline_design(x, self.knots, self.term.degree) @ self.transform

    def grid(self, grid_size: int) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, grid_size)


def build_basis(x: np.ndarray, term: SmoothTerm) -> SmoothBasis:
    """Design block plus penalty for one smooth over observed covariate x.

    The returned block holds the centered (q-1 column) design; the raw-basis
    pieces (knots, column means, transform) are kept so new rows can be built
    for partial-effect grids.
    """
    x = np.asarray(x, dtype=np.float64)
    try:
        knots = place_knots(x, term.basis_size, term.degree)
    except ValidationError as exc:
        raise ValidationError(f"smooth {term.feature!r}: {exc}") from None
    raw = bspline_design(x, knots, term.degree)
    col_means = raw.mean(axis=0)
    transform = centering_transform(col_means)
    return SmoothBasis(
        term=term,
        knots=knots,
        col_means=col_means,
        transform=transform,
        x_min=float(np.min(x)),
        x_max=float(np.max(x)),
        design=raw @ transform,
    )
