"""Gaussian additive models with penalized spline smooths and linear effects.

The design is assembled in streaming row chunks and only the cross-products
X'X and X'y are kept, so memory is O(columns^2) regardless of n. Smoothing
parameters minimize GCV(lambda) = n*RSS / (n - tr H)^2 by per-coordinate
golden section over log lambda, cycled to convergence. Coefficient standard
errors come from the penalized posterior covariance (X'X + sum lam*S)^-1 *
sigma2_hat with sigma2_hat = RSS / (n - edf).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .errors import CollinearityError, ValidationError
from .features import FeatureTable
from .splines import SmoothBasis, SmoothTerm, bspline_design, centering_transform, place_knots

LOG_LAMBDA_LO = -8.0
LOG_LAMBDA_HI = 12.0
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0

ORG_FLAGS = ("is_same_org", "is_sender_org", "is_receiver_org")
JACCARD_TERMS = ("j_section", "j_class", "j_subclass", "j_maingroup", "j_subgroup")


@dataclass(frozen=True)
class ModelSpec:
    linear_terms: tuple[str, ...] = ()
    smooth_terms: tuple[SmoothTerm, ...] = ()

    def __post_init__(self):
        smooth_names = [t.feature for t in self.smooth_terms]
        overlap = set(self.linear_terms) & set(smooth_names)
        if overlap:
            raise ValidationError(
                f"covariates in both linear and smooth lists: {sorted(overlap)}"
            )
        if len(set(self.linear_terms)) != len(self.linear_terms) or len(
            set(smooth_names)
        ) != len(smooth_names):
            raise ValidationError("duplicate covariate in model spec")


def model_catalog(
    level: int, basis_size: int = 20, degree: int = 3, penalty_order: int = 2
) -> ModelSpec:
    """Covariate sets for the four nested model specifications.

    Level 0 smooths the publication date only; 1 adds the temporal lag smooth;
    2 adds the log backward-citation-count smooth and the three organization
    fixed effects; 3 adds the five IPC Jaccard indices as linear terms.
    """
    if level not in (0, 1, 2, 3):
        raise ValidationError(f"invalid model level {level!r} (expected 0..3)")

    def smooth(name: str) -> SmoothTerm:
        return SmoothTerm(name, basis_size, degree, penalty_order)

    smooths = [smooth("pub_date")]
    linear: tuple[str, ...] = ()
    if level >= 1:
        smooths.append(smooth("temporal_diff_days"))
    if level >= 2:
        smooths.append(smooth("log_sender_citations"))
        linear = ORG_FLAGS
    if level == 3:
        linear = ORG_FLAGS + JACCARD_TERMS
    return ModelSpec(linear_terms=linear, smooth_terms=tuple(smooths))


@dataclass
class _SolveResult:
    beta: np.ndarray
    edf_by_col: np.ndarray
    hat_trace: float
    rss: float
    cho: tuple


class PenalizedNormalEquations:
    """Penalized least squares on accumulated cross-products.

    penalties is a list of (column slice, penalty matrix) pairs in the
    (constraint-absorbed) column space of the design.
    """

    def __init__(self, gram, xty, yty, n, names, penalties):
        self.gram = np.asarray(gram, dtype=np.float64)
        self.xty = np.asarray(xty, dtype=np.float64)
        self.yty = float(yty)
        self.n = int(n)
        self.names = list(names)
        self.penalties = list(penalties)

    def solve(self, lambdas: Sequence[float]) -> _SolveResult:
        a = self.gram.copy()
        for (block, s), lam in zip(self.penalties, lambdas):
            a[block, block] += lam * s
        try:
            cho = sla.cho_factor(a, lower=True)
        except np.linalg.LinAlgError:
            raise self._collinearity_error(a) from None
        beta = sla.cho_solve(cho, self.xty)
        influence = sla.cho_solve(cho, self.gram)
        edf_by_col = np.diag(influence).copy()
        rss = self.yty - 2.0 * beta @ self.xty + beta @ self.gram @ beta
        return _SolveResult(beta, edf_by_col, float(edf_by_col.sum()), max(rss, 0.0), cho)

    def gcv(self, lambdas: Sequence[float]) -> float:
        result = self.solve(lambdas)
        denom = self.n - result.hat_trace
        if denom <= 0.0:
            return math.inf
        return self.n * result.rss / denom**2

    def covariance(self, solve: _SolveResult, sigma2: float) -> np.ndarray:
        return sla.cho_solve(solve.cho, np.eye(len(self.xty))) * sigma2

    def _collinearity_error(self, a: np.ndarray) -> CollinearityError:
        evals, evecs = np.linalg.eigh(a)
        tol = max(evals[-1], 1.0) * 1e-10
        null = evecs[:, evals < tol]
        if null.size == 0:
            null = evecs[:, :1]
        weight = np.abs(null).max(axis=1)
        cols = [self.names[i] for i in np.flatnonzero(weight > 0.1 * weight.max())]
        return CollinearityError(cols or self.names)


def _equations_from_design(X, y, penalties, names=None) -> PenalizedNormalEquations:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if names is None:
        names = [f"x{j}" for j in range(X.shape[1])]
    return PenalizedNormalEquations(X.T @ X, X.T @ y, y @ y, X.shape[0], names, penalties)


def fit_penalized_ls(X, y, penalties, lambdas) -> tuple[np.ndarray, float, float]:
    """argmin ||y - X b||^2 + sum_j lam_j b' S_j b.

    Returns (beta, hat_trace, rss); hat_trace = tr(X (X'X + sum lam S)^-1 X')
    computed from cross-products without forming any n x n matrix.
    """
    eqs = _equations_from_design(X, y, penalties)
    result = eqs.solve(lambdas)
    return result.beta, result.hat_trace, result.rss


def _golden_section(score, lo: float, hi: float, xtol: float = 1e-3) -> tuple[float, float]:
    a, b = lo, hi
    best_x, best_f = lo, score(lo)
    f_hi = score(hi)
    if f_hi < best_f:
        best_x, best_f = hi, f_hi
    while b - a > xtol:
        c = b - _INVPHI * (b - a)
        d = a + _INVPHI * (b - a)
        fc, fd = score(c), score(d)
        if fc < best_f:
            best_x, best_f = c, fc
        if fd < best_f:
            best_x, best_f = d, fd
        if fc < fd:
            b = d
        else:
            a = c
    return best_x, best_f


def optimize_lambdas(
    eqs: PenalizedNormalEquations,
    log_lo: float = LOG_LAMBDA_LO,
    log_hi: float = LOG_LAMBDA_HI,
    gcv_rtol: float = 1e-7,
    max_cycles: int = 50,
    coarse_points: int = 201,
) -> tuple[np.ndarray, dict]:
    """Minimize GCV over the per-smooth penalty weights.

    Each coordinate is bracketed on a dense log grid (GCV valleys can be
    nearly flat over several log units, so a coarse scan may pick the wrong
    micro-basin) and refined by golden section; coordinates are cycled until
    the relative GCV change drops below gcv_rtol. Deterministic;
    non-convergence returns the best found lambdas with converged=False.
    """
    k = len(eqs.penalties)
    if k == 0:
        return np.zeros(0), {"converged": True, "cycles": 0, "gcv": eqs.gcv(())}
    loglams = np.zeros(k)
    coarse = np.linspace(log_lo, log_hi, coarse_points)
    previous = math.inf
    converged = False
    cycles = 0
    for cycles in range(1, max_cycles + 1):
        for j in range(k):
            def score(g: float, j=j) -> float:
                trial = loglams.copy()
                trial[j] = g
                return eqs.gcv(np.exp(trial))

            values = [score(g) for g in coarse]
            i = int(np.argmin(values))
            lo = coarse[max(i - 1, 0)]
            hi = coarse[min(i + 1, coarse_points - 1)]
            best_g, _ = _golden_section(score, lo, hi)
            loglams[j] = best_g
        current = eqs.gcv(np.exp(loglams))
        if abs(previous - current) <= gcv_rtol * max(abs(current), 1.0):
            converged = True
            break
        previous = current
    return np.exp(loglams), {"converged": converged, "cycles": cycles, "gcv": current}


def optimize_lambda(X, y, penalties, **kwargs) -> tuple[np.ndarray, dict]:
    """GCV-optimal penalty weights for an explicit design matrix."""
    return optimize_lambdas(_equations_from_design(X, y, penalties), **kwargs)


@dataclass
class FittedSmooth:
    basis: SmoothBasis
    block: slice
    edf: float
    lam: float

    @property
    def name(self) -> str:
        return self.basis.term.feature


@dataclass
class ModelFit:
    spec: ModelSpec
    names: list[str]
    beta: np.ndarray
    cov_beta: np.ndarray
    smooths: list[FittedSmooth]
    lambdas: dict[str, float]
    edf_total: float
    edf_parametric: float
    sigma2_hat: float
    rss: float
    tss: float
    aic: float
    gcv: float
    dev_explained: float
    n: int
    converged: bool
    fitted: np.ndarray = field(repr=False, default=None)

    def coefficient(self, name: str) -> tuple[float, float]:
        """(estimate, standard error) for a named parametric coefficient."""
        i = self.names.index(name)
        return float(self.beta[i]), float(math.sqrt(max(self.cov_beta[i, i], 0.0)))

    def smooth(self, name: str) -> FittedSmooth:
        for s in self.smooths:
            if s.name == name:
                return s
        raise ValidationError(f"unknown smooth term {name!r}")


@dataclass(frozen=True)
class PartialEffect:
    term: str
    grid: np.ndarray
    f_hat: np.ndarray
    se: np.ndarray


def _assemble_equations(
    spec: ModelSpec, table: FeatureTable, chunk_size: int
) -> tuple[PenalizedNormalEquations, list[FittedSmooth], float, np.ndarray]:
    y = table.column("similarity")
    n = y.size
    if n == 0:
        raise ValidationError("empty feature table")
    linear_cols = [table.column(name) for name in spec.linear_terms]
    smooth_x = [table.column(t.feature) for t in spec.smooth_terms]
    knots = []
    for term, x in zip(spec.smooth_terms, smooth_x):
        try:
            knots.append(place_knots(x, term.basis_size, term.degree))
        except ValidationError as exc:
            raise ValidationError(f"smooth {term.feature!r}: {exc}") from None

    n_par = 1 + len(linear_cols)
    sizes = [t.basis_size for t in spec.smooth_terms]
    p_raw = n_par + sum(sizes)
    gram = np.zeros((p_raw, p_raw))
    xty = np.zeros(p_raw)
    col_sum = np.zeros(p_raw)
    yty = 0.0
    y_sum = 0.0

    def raw_chunk(lo: int, hi: int) -> np.ndarray:
        cols = [np.ones(hi - lo)]
        cols.extend(c[lo:hi] for c in linear_cols)
        block = np.column_stack(cols)
        parts = [block]
        for term, x, kn in zip(spec.smooth_terms, smooth_x, knots):
            parts.append(bspline_design(x[lo:hi], kn, term.degree))
        return np.hstack(parts)

    for lo in range(0, n, chunk_size):
        hi = min(lo + chunk_size, n)
        xc = raw_chunk(lo, hi)
        yc = y[lo:hi]
        gram += xc.T @ xc
        xty += xc.T @ yc
        col_sum += xc.sum(axis=0)
        yty += yc @ yc
        y_sum += yc.sum()

    # absorb the per-smooth sum-to-zero constraints on the accumulated
    # cross-products: T is block diagonal, identity over parametric columns
    transform_blocks = []
    smooths: list[FittedSmooth] = []
    names = ["intercept"] + list(spec.linear_terms)
    offset_raw = n_par
    offset_con = n_par
    for term, x, kn, q in zip(spec.smooth_terms, smooth_x, knots, sizes):
        col_means = col_sum[offset_raw : offset_raw + q] / n
        z = centering_transform(col_means)
        basis = SmoothBasis(
            term=term,
            knots=kn,
            col_means=col_means,
            transform=z,
            x_min=float(np.min(x)),
            x_max=float(np.max(x)),
        )
        block = slice(offset_con, offset_con + q - 1)
        smooths.append(FittedSmooth(basis=basis, block=block, edf=math.nan, lam=math.nan))
        names.extend(f"s({term.feature}).{k}" for k in range(1, q))
        transform_blocks.append(z)
        offset_raw += q
        offset_con += q - 1

    t = sla.block_diag(np.eye(n_par), *transform_blocks) if transform_blocks else np.eye(n_par)
    gram_c = t.T @ gram @ t
    xty_c = t.T @ xty
    penalties = [(s.block, s.basis.penalty()) for s in smooths]
    eqs = PenalizedNormalEquations(gram_c, xty_c, yty, n, names, penalties)
    tss = max(yty - n * (y_sum / n) ** 2, 0.0)

    def fitted_values(beta: np.ndarray) -> np.ndarray:
        out = np.empty(n)
        for lo in range(0, n, chunk_size):
            hi = min(lo + chunk_size, n)
            out[lo:hi] = raw_chunk(lo, hi) @ (t @ beta)
        return out

    return eqs, smooths, tss, fitted_values


def fit_model(
    spec: ModelSpec,
    table: FeatureTable,
    log_lo: float = LOG_LAMBDA_LO,
    log_hi: float = LOG_LAMBDA_HI,
    chunk_size: int = 65536,
    store_fitted: bool = True,
) -> ModelFit:
    """Fit the additive model: optimize lambdas by GCV, then solve.

    Deterministic: the same table and spec reproduce bit-identical summaries.
    """
    eqs, smooths, tss, fitted_values = _assemble_equations(spec, table, chunk_size)
    n = eqs.n
    lambdas, opt_info = optimize_lambdas(eqs, log_lo=log_lo, log_hi=log_hi)
    result = eqs.solve(lambdas)
    edf_total = result.hat_trace
    n_par = 1 + len(spec.linear_terms)
    edf_parametric = float(result.edf_by_col[:n_par].sum())
    for s, lam in zip(smooths, lambdas):
        s.lam = float(lam)
        s.edf = float(result.edf_by_col[s.block].sum())
    dof = n - edf_total
    sigma2 = result.rss / dof if dof > 0 else math.inf
    cov = eqs.covariance(result, sigma2)
    gcv = n * result.rss / dof**2 if dof > 0 else math.inf
    aic = (
        n * math.log(max(result.rss, 1e-300) / n)
        + n * math.log(2.0 * math.pi)
        + n
        + 2.0 * (edf_total + 1.0)
    )
    dev_explained = 1.0 - result.rss / tss if tss > 0 else 0.0
    return ModelFit(
        spec=spec,
        names=eqs.names,
        beta=result.beta,
        cov_beta=cov,
        smooths=smooths,
        lambdas={s.name: s.lam for s in smooths},
        edf_total=float(edf_total),
        edf_parametric=edf_parametric,
        sigma2_hat=float(sigma2),
        rss=float(result.rss),
        tss=float(tss),
        aic=float(aic),
        gcv=float(gcv),
        dev_explained=float(dev_explained),
        n=n,
        converged=opt_info["converged"],
        fitted=fitted_values(result.beta) if store_fitted else None,
    )


def partial_effect(fit: ModelFit, term: str, grid_size: int = 200) -> PartialEffect:
    """Centered smooth evaluated on an even grid over the observed range,
    with pointwise standard errors from the coefficient covariance."""
    if grid_size < 2:
        raise ValidationError("grid_size must be at least 2")
    s = fit.smooth(term)
    grid = s.basis.grid(grid_size)
    rows = s.basis.design_rows(grid)
    coef = fit.beta[s.block]
    cov = fit.cov_beta[s.block, s.block]
    f_hat = rows @ coef
    se = np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", rows, cov, rows), 0.0))
    return PartialEffect(term=term, grid=grid, f_hat=f_hat, se=se)


def two_sided_p(estimate: float, se: float) -> float:
    if se <= 0.0:
        return math.nan
    return math.erfc(abs(estimate / se) / math.sqrt(2.0))


def fit_report(fit: ModelFit, model_level: int, dropped_rows: int = 0) -> dict:
    """JSON-ready summary mirroring the comparison-table layout."""
    coefficients = []
    for name in ["intercept"] + list(fit.spec.linear_terms):
        est, se = fit.coefficient(name)
        coefficients.append(
            {"name": name, "estimate": est, "se": se, "p": two_sided_p(est, se)}
        )
    return {
        "model_level": model_level,
        "n": fit.n,
        "coefficients": coefficients,
        "smooths": [
            {"name": s.name, "lambda": s.lam, "edf": s.edf} for s in fit.smooths
        ],
        "aic": fit.aic,
        "gcv": fit.gcv,
        "dev_explained": fit.dev_explained,
        "dropped_rows": dropped_rows,
        "converged": fit.converged,
    }
