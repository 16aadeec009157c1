"""Design-matrix conditions: sparse Riesz eigenvalues, compatibility, transfer checks.

These quantities are NP-hard in general. Exact modes enumerate supports under
an explicit budget; heuristic modes report bounds and say so.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import optimize

from config.settings import settings
from utils.errors import ConfigurationError, EnumerationBudgetError, InputError
from utils.logger import get_logger

logger = get_logger(__name__)

_CHUNK = 4096


class EigenMode(str, Enum):
    EXACT = "exact"
    GREEDY = "greedy"


class CompatibilityMethod(str, Enum):
    PROJECTED_DESCENT = "projected_descent"
    VERTEX_GRID = "vertex_grid"


def _check_gram(gram: np.ndarray) -> np.ndarray:
    gram = np.asarray(gram, dtype=float)
    if gram.ndim != 2 or gram.shape[0] != gram.shape[1]:
        raise InputError(f"expected a square matrix, got shape {gram.shape}")
    if not np.all(np.isfinite(gram)):
        raise InputError("matrix contains non-finite entries")
    if np.max(np.abs(gram - gram.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(gram), initial=0.0)):
        raise InputError("matrix is not symmetric")
    return 0.5 * (gram + gram.T)


# Sparse eigenvalues -----------------------------------------------------------


@dataclass
class SparseEigenResult:
    phi_min: float
    phi_max: float
    sparsity: int
    certified: bool
    argmin_support: Tuple[int, ...] = ()
    argmax_support: Tuple[int, ...] = ()


def _chunks(iterator: Iterable[Tuple[int, ...]], size: int):
    while True:
        block = list(itertools.islice(iterator, size))
        if not block:
            return
        yield np.asarray(block, dtype=np.intp)


def _exact_sparse_eigen(gram: np.ndarray, s: int, budget: int) -> SparseEigenResult:
    d = gram.shape[0]
    count = math.comb(d, s)
    if count > budget:
        raise EnumerationBudgetError(
            f"exact enumeration needs C({d},{s}) = {count} submatrices, budget is {budget}"
        )
    # By eigenvalue interlacing the extremes over |S| <= s are attained at |S| = s.
    lo, hi = math.inf, -math.inf
    lo_support: Tuple[int, ...] = ()
    hi_support: Tuple[int, ...] = ()
    for block in _chunks(itertools.combinations(range(d), s), _CHUNK):
        subs = gram[block[:, :, None], block[:, None, :]]
        eigs = np.linalg.eigvalsh(subs)
        k_lo = int(np.argmin(eigs[:, 0]))
        k_hi = int(np.argmax(eigs[:, -1]))
        if eigs[k_lo, 0] < lo:
            lo, lo_support = float(eigs[k_lo, 0]), tuple(block[k_lo].tolist())
        if eigs[k_hi, -1] > hi:
            hi, hi_support = float(eigs[k_hi, -1]), tuple(block[k_hi].tolist())
    return SparseEigenResult(lo, hi, s, True, lo_support, hi_support)


def _greedy_support(gram: np.ndarray, s: int, smallest: bool) -> Tuple[float, Tuple[int, ...]]:
    d = gram.shape[0]
    diag = np.diag(gram)
    support = [int(np.argmin(diag) if smallest else np.argmax(diag))]
    value = float(diag[support[0]])
    while len(support) < s:
        best_j, best_value = None, None
        for j in range(d):
            if j in support:
                continue
            idx = support + [j]
            eigs = np.linalg.eigvalsh(gram[np.ix_(idx, idx)])
            candidate = eigs[0] if smallest else eigs[-1]
            if best_value is None or (candidate < best_value if smallest else candidate > best_value):
                best_j, best_value = j, float(candidate)
        support.append(best_j)
        value = best_value
    return value, tuple(sorted(support))


def sparse_eigen(
    gram: np.ndarray,
    s: int,
    mode: Union[EigenMode, str] = EigenMode.EXACT,
    budget: Optional[int] = None,
) -> SparseEigenResult:
    """Minimum and maximum eigenvalues over principal submatrices of size <= s.

    GREEDY mode grows one support per extreme by forward selection; its
    phi_min is an upper bound and its phi_max a lower bound on the truth.
    """
    gram = _check_gram(gram)
    mode = EigenMode(mode)
    d = gram.shape[0]
    if not 1 <= s <= d:
        raise ConfigurationError(f"sparsity must lie in [1, {d}], got {s}")
    if mode is EigenMode.EXACT:
        return _exact_sparse_eigen(gram, s, settings.enumeration_budget if budget is None else budget)
    lo, lo_support = _greedy_support(gram, s, smallest=True)
    hi, hi_support = _greedy_support(gram, s, smallest=False)
    return SparseEigenResult(lo, hi, s, False, lo_support, hi_support)


# Compatibility ----------------------------------------------------------------


@dataclass
class CompatibilityResult:
    """Best objective found over the cone slice; an upper bound on the infimum."""

    value: float
    direction: np.ndarray
    method: CompatibilityMethod
    certified: bool
    evaluations: int = 0


def identity_compatibility(dim: int, support_size: int, cone_factor: float = 7.0) -> float:
    """Closed-form compatibility number of the identity matrix.

    Uniform mass is optimal while it stays inside the cone; otherwise the
    optimum sits on the cone boundary with on-support mass 1 / (1 + alpha).
    """
    k, d, alpha = support_size, dim, cone_factor
    if not 1 <= k <= d:
        raise ConfigurationError(f"support size must lie in [1, {d}], got {k}")
    if d - k <= alpha * k:
        return k / d
    on = 1.0 / (1.0 + alpha)
    off = alpha / (1.0 + alpha)
    return k * (on ** 2 / k + off ** 2 / (d - k))


def _support_mask(dim: int, support: Sequence[int]) -> np.ndarray:
    support = sorted(set(int(j) for j in support))
    if not support:
        raise ConfigurationError("the support set S* must be nonempty")
    if support[0] < 0 or support[-1] >= dim:
        raise ConfigurationError(f"support indices must lie in [0, {dim})")
    mask = np.zeros(dim, dtype=bool)
    mask[support] = True
    return mask


def _cone_point(mask: np.ndarray, alpha: float, rng: np.random.Generator, concentration: float = 1.0) -> np.ndarray:
    """Nonnegative point of the slice sum(u) = 1 with off-support mass <= alpha * on-support mass."""
    on_mass = rng.uniform(1.0 / (1.0 + alpha), 1.0) if np.any(~mask) else 1.0
    u = np.zeros(mask.shape[0])
    u[mask] = on_mass * rng.dirichlet(np.full(int(mask.sum()), concentration))
    if np.any(~mask):
        u[~mask] = (1.0 - on_mass) * rng.dirichlet(np.full(int((~mask).sum()), concentration))
    return u


def _solve_sign_pattern(gram, signs, mask, alpha, start):
    quad = gram * np.outer(signs, signs)
    cone = np.where(mask, alpha, -1.0)
    d = gram.shape[0]
    result = optimize.minimize(
        lambda u: float(u @ quad @ u),
        start,
        jac=lambda u: 2.0 * quad @ u,
        bounds=[(0.0, None)] * d,
        constraints=[
            {"type": "eq", "fun": lambda u: u.sum() - 1.0, "jac": lambda u: np.ones(d)},
            {"type": "ineq", "fun": lambda u: float(cone @ u), "jac": lambda u: cone},
        ],
        method="SLSQP",
        options={"ftol": 1e-14, "maxiter": 500},
    )
    u = np.maximum(result.x, 0.0)
    u /= u.sum()
    return u, float(u @ quad @ u), result.nfev


def _projected_descent(gram, mask, alpha, restarts, rng):
    d = gram.shape[0]
    best_value, best_direction = math.inf, None
    values: List[float] = []
    evaluations = 0
    for restart in range(restarts):
        signs = np.ones(d) if restart == 0 else rng.choice([-1.0, 1.0], size=d)
        u, value, nfev = _solve_sign_pattern(gram, signs, mask, alpha, _cone_point(mask, alpha, rng))
        evaluations += nfev
        # Coordinates at zero may prefer the opposite sign.
        gradient = 2.0 * signs * (gram @ (signs * u))
        flips = (u < 1e-10) & (gradient > 1e-12)
        if np.any(flips):
            signs = np.where(flips, -signs, signs)
            u, value, nfev = _solve_sign_pattern(gram, signs, mask, alpha, u)
            evaluations += nfev
        values.append(value)
        if value < best_value:
            best_value, best_direction = value, signs * u
    tolerance = 1e-6 * max(abs(best_value), 1e-12)
    repeats = sum(1 for v in values if v - best_value <= tolerance)
    return best_value, best_direction, repeats >= 2, evaluations


def _cone_batch(mask: np.ndarray, alpha: float, rng: np.random.Generator, count: int, concentration: float) -> np.ndarray:
    points = np.zeros((count, mask.shape[0]))
    off = ~mask
    on_mass = rng.uniform(1.0 / (1.0 + alpha), 1.0, size=count) if np.any(off) else np.ones(count)
    points[:, mask] = on_mass[:, None] * rng.dirichlet(np.full(int(mask.sum()), concentration), size=count)
    if np.any(off):
        points[:, off] = (1.0 - on_mass)[:, None] * rng.dirichlet(np.full(int(off.sum()), concentration), size=count)
    return points


def _vertex_grid(gram, mask, alpha, samples, rng):
    d = gram.shape[0]
    best_value, best_direction = math.inf, None
    drawn = 0
    batch_index = 0
    while drawn < samples:
        batch = min(samples - drawn, 20_000)
        # Low concentration pushes samples toward the faces of the slice.
        concentration = 1.0 if batch_index % 2 == 0 else 0.3
        points = _cone_batch(mask, alpha, rng, batch, concentration)
        points *= rng.choice([-1.0, 1.0], size=(batch, d))
        values = np.einsum("pi,ij,pj->p", points, gram, points)
        k = int(np.argmin(values))
        if values[k] < best_value:
            best_value, best_direction = float(values[k]), points[k].copy()
        drawn += batch
        batch_index += 1
    return best_value, best_direction


def compatibility(
    gram: np.ndarray,
    support: Sequence[int],
    cone_factor: float = 7.0,
    method: Union[CompatibilityMethod, str] = CompatibilityMethod.PROJECTED_DESCENT,
    restarts: Optional[int] = None,
    samples: int = 200_000,
    seed: int = 0,
) -> CompatibilityResult:
    """inf over the cone C_alpha(S*) of |S*| d^T M d / ||d||_1^2.

    The objective is scale invariant, so the search runs over the slice
    ||d||_1 = 1. For a fixed sign pattern the problem is a convex QP over a
    polytope; PROJECTED_DESCENT solves it for several random sign patterns,
    VERTEX_GRID samples the slice densely (small d only).
    """
    gram = _check_gram(gram)
    method = CompatibilityMethod(method)
    if cone_factor <= 0:
        raise ConfigurationError(f"cone factor must be positive, got {cone_factor}")
    mask = _support_mask(gram.shape[0], support)
    size = int(mask.sum())
    rng = np.random.default_rng(seed)

    if method is CompatibilityMethod.PROJECTED_DESCENT:
        restarts = settings.compatibility_restarts if restarts is None else restarts
        value, direction, certified, evaluations = _projected_descent(gram, mask, cone_factor, restarts, rng)
    else:
        value, direction = _vertex_grid(gram, mask, cone_factor, samples, rng)
        certified, evaluations = False, samples
    return CompatibilityResult(
        value=size * value,
        direction=direction,
        method=method,
        certified=certified,
        evaluations=evaluations,
    )


# Transfer lemma ---------------------------------------------------------------


@dataclass
class TransferCheck:
    hypothesis_holds: bool
    hypothesis_margin: float
    diagonal_dominates: bool
    min_slack: float
    samples: int

    @property
    def passed(self) -> bool:
        return self.hypothesis_holds and self.diagonal_dominates and self.min_slack >= -1e-10


def transfer_bound_check(
    gram_hat: np.ndarray,
    gram_ref: np.ndarray,
    m: int,
    eta: float,
    diagonal: np.ndarray,
    samples: int = 10_000,
    seed: int = 0,
    budget: Optional[int] = None,
) -> TransferCheck:
    """Check x^T M_hat x >= (1 - eta) x^T M_ref x - ||D^{1/2} x||_1^2 / (m - 1).

    The hypothesis (the difference M_hat - (1 - eta) M_ref is nonnegative on
    all m-sparse directions) is verified by exact enumeration, and the
    inequality is then evaluated on dense and sparse random vectors.
    """
    gram_hat = _check_gram(gram_hat)
    gram_ref = _check_gram(gram_ref)
    if gram_hat.shape != gram_ref.shape:
        raise InputError(f"matrix shapes differ: {gram_hat.shape} vs {gram_ref.shape}")
    d = gram_hat.shape[0]
    if not 2 <= m <= d:
        raise ConfigurationError(f"m must lie in [2, {d}], got {m}")
    diagonal = np.asarray(diagonal, dtype=float)
    if diagonal.shape != (d,) or np.any(diagonal < 0):
        raise InputError("D must be a nonnegative diagonal of length d")

    difference = gram_hat - (1.0 - eta) * gram_ref
    margin = sparse_eigen(difference, m, EigenMode.EXACT, budget=budget).phi_min
    hypothesis = margin >= -1e-12
    dominates = bool(np.all(diagonal >= np.diag(difference) - 1e-12))
    if not hypothesis:
        logger.warning("Transfer hypothesis fails on an m-sparse direction", m=m, margin=margin)
    if not dominates:
        logger.warning("D does not dominate the diagonal of the difference", m=m)

    rng = np.random.default_rng(seed)
    dense = rng.standard_normal((samples // 2, d))
    sparse = rng.standard_normal((samples - samples // 2, d))
    sizes = rng.integers(1, d + 1, size=sparse.shape[0])
    keep = np.argsort(rng.random(sparse.shape), axis=1) < sizes[:, None]
    sparse = np.where(keep, sparse, 0.0)
    points = np.vstack([dense, sparse])
    lhs = np.einsum("pi,ij,pj->p", points, difference, points)
    penalty = (np.abs(points) @ np.sqrt(diagonal)) ** 2 / (m - 1)
    slack = lhs + penalty
    return TransferCheck(
        hypothesis_holds=bool(hypothesis),
        hypothesis_margin=float(margin),
        diagonal_dominates=dominates,
        min_slack=float(slack.min()),
        samples=samples,
    )


# Summary ----------------------------------------------------------------------


@dataclass
class DesignDiagnostics:
    gram: np.ndarray
    sparsity: int
    phi_min: float
    phi_max: float
    compat: float
    support: Tuple[int, ...]
    eigen_certified: bool = True
    compat_certified: bool = False
    notes: List[str] = field(default_factory=list)


def diagnose_design(
    gram: np.ndarray,
    support: Sequence[int],
    sparsity: Optional[int] = None,
    cone_factor: float = 7.0,
    seed: int = 0,
) -> DesignDiagnostics:
    """SRC eigenvalues and compatibility for one Gram matrix.

    Falls back to greedy eigen bounds when exact enumeration exceeds the budget.
    """
    gram = _check_gram(gram)
    sparsity = len(set(support)) if sparsity is None else sparsity
    notes: List[str] = []
    try:
        eigen = sparse_eigen(gram, sparsity, EigenMode.EXACT)
    except EnumerationBudgetError as exc:
        notes.append(f"greedy eigen bounds: {exc}")
        eigen = sparse_eigen(gram, sparsity, EigenMode.GREEDY)
    compat = compatibility(gram, support, cone_factor, seed=seed)
    return DesignDiagnostics(
        gram=gram,
        sparsity=sparsity,
        phi_min=max(eigen.phi_min, 0.0),
        phi_max=eigen.phi_max,
        compat=max(compat.value, 0.0),
        support=tuple(sorted(set(int(j) for j in support))),
        eigen_certified=eigen.certified,
        compat_certified=compat.certified,
        notes=notes,
    )
