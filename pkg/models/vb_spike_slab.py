"""Spike-and-slab Laplace prior and its mean-field variational posterior.

The working prior puts, independently on each coordinate, mass ``1 - w`` on
zero and mass ``w`` on a Laplace slab with rate ``lambda / sigma``. The
inclusion probability ``w = a0 / (a0 + b0)`` is the mean of the
``Beta(a0, b0 = d^u)`` hyperprior. The variational family is

    q(beta) = prod_j [ gamma_j N(mu_j, s_j^2) + (1 - gamma_j) delta_0 ]

and is fitted by coordinate ascent (CAVI). For each coordinate the pair
(mu_j, s_j) maximizes a jointly concave objective; it is solved by
alternating safeguarded Newton steps, after which gamma_j is the logistic
of the coordinate's log evidence ratio.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np
from scipy import special

from config.settings import settings
from models.sparse_linear import RegressionProblem, default_penalty, lasso_fit
from utils.errors import ConfigurationError, InputError
from utils.logger import get_logger

logger = get_logger(__name__)

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_HALF_LOG_2PIE = 0.5 * math.log(2.0 * math.pi * math.e)


@dataclass(frozen=True)
class SpikeSlabPrior:
    slab_scale: float
    noise_sigma: float
    dim: int
    inclusion_exponent: float = 1.0
    inclusion_a0: float = 1.0

    def __post_init__(self):
        if self.slab_scale <= 0:
            raise ConfigurationError(f"slab scale lambda must be positive, got {self.slab_scale}")
        if self.noise_sigma <= 0:
            raise ConfigurationError(f"noise sigma must be positive, got {self.noise_sigma}")
        if self.inclusion_exponent <= 0:
            raise ConfigurationError(f"inclusion exponent u must be positive, got {self.inclusion_exponent}")
        if self.dim < 1:
            raise ConfigurationError(f"dim must be >= 1, got {self.dim}")

    @property
    def inclusion_b0(self) -> float:
        return float(self.dim) ** self.inclusion_exponent

    @property
    def inclusion_prob(self) -> float:
        return self.inclusion_a0 / (self.inclusion_a0 + self.inclusion_b0)

    @property
    def prior_log_odds(self) -> float:
        return math.log(self.inclusion_a0 / self.inclusion_b0)

    @property
    def rate(self) -> float:
        """Laplace rate lambda / sigma."""
        return self.slab_scale / self.noise_sigma

    def with_scale(self, slab_scale: float) -> "SpikeSlabPrior":
        return SpikeSlabPrior(
            slab_scale=slab_scale,
            noise_sigma=self.noise_sigma,
            dim=self.dim,
            inclusion_exponent=self.inclusion_exponent,
            inclusion_a0=self.inclusion_a0,
        )


@dataclass
class SpikeSlabPosterior:
    mu: np.ndarray
    sdev: np.ndarray
    gamma: np.ndarray
    elbo_trace: List[float] = field(default_factory=list)
    converged: bool = False
    sweeps: int = 0

    @property
    def dim(self) -> int:
        return self.mu.shape[0]


def expected_abs(mu, sdev):
    """E|b| for b ~ N(mu, sdev^2)."""
    mu = np.asarray(mu, dtype=float)
    sdev = np.asarray(sdev, dtype=float)
    z = mu / sdev
    return sdev * math.sqrt(2.0 / math.pi) * np.exp(-0.5 * z * z) + mu * special.erf(z / _SQRT2)


def _check_data(design: np.ndarray, response: np.ndarray, dim: int):
    design = np.asarray(design, dtype=float)
    response = np.asarray(response, dtype=float)
    if design.ndim != 2 or design.shape[1] != dim:
        raise InputError(f"design has shape {design.shape}, expected (n, {dim})")
    if response.shape != (design.shape[0],):
        raise InputError(f"response has shape {response.shape}, expected ({design.shape[0]},)")
    if not (np.all(np.isfinite(design)) and np.all(np.isfinite(response))):
        raise InputError("design or response contains non-finite entries")
    return design, response


def elbo(prior: SpikeSlabPrior, design: np.ndarray, response: np.ndarray, posterior: SpikeSlabPosterior) -> float:
    """Evidence lower bound of ``posterior`` under the Gaussian likelihood."""
    design, response = _check_data(design, response, prior.dim)
    n = design.shape[0]
    sigma2 = prior.noise_sigma ** 2
    mu, sdev, gamma = posterior.mu, posterior.sdev, posterior.gamma

    mean = gamma * mu
    residual = response - design @ mean
    col_sq = np.einsum("ij,ij->j", design, design)
    variance = gamma * (mu * mu + sdev * sdev) - (gamma * mu) ** 2
    log_lik = -0.5 * n * math.log(2.0 * math.pi * sigma2) - (
        residual @ residual + col_sq @ variance
    ) / (2.0 * sigma2)

    w = prior.inclusion_prob
    kappa = prior.rate
    slab = gamma * (
        math.log(w) + math.log(kappa / 2.0) - kappa * expected_abs(mu, sdev)
        + _HALF_LOG_2PIE + np.log(sdev)
    )
    spike = (1.0 - gamma) * math.log1p(-w)
    entropy = -special.xlogy(gamma, gamma) - special.xlogy(1.0 - gamma, 1.0 - gamma)
    return float(log_lik + np.sum(slab + spike + entropy))


def _safeguarded_newton(fn, x: float, lo: float, hi: float, tol: float, max_iter: int = 100) -> float:
    """Root of a decreasing function bracketed by [lo, hi]."""
    if hi <= lo:
        return lo
    x = min(max(x, lo), hi)
    for _ in range(max_iter):
        value, slope = fn(x)
        if value == 0.0:
            return x
        if value > 0.0:
            lo = x
        else:
            hi = x
        candidate = x - value / slope if slope < 0.0 else 0.5 * (lo + hi)
        if not lo < candidate < hi:
            candidate = 0.5 * (lo + hi)
        if abs(candidate - x) <= tol * (1.0 + abs(x)):
            return candidate
        x = candidate
    return x


def _slab_optimum(a: float, b: float, kappa: float, mu: float, sdev: float, tol: float):
    """Maximize b mu - a (mu^2 + s^2)/2 - kappa E|beta| + log s over (mu, s)."""
    phi0 = _INV_SQRT_2PI
    s_lo = 1.0 / (kappa * phi0 + math.sqrt(kappa * kappa * phi0 * phi0 + a))
    if a == 0.0:
        return 0.0, s_lo
    s_hi = 1.0 / math.sqrt(a)
    mu_lo, mu_hi = (b - kappa) / a, (b + kappa) / a

    for _ in range(50):
        def mu_equation(m, s=sdev):
            z = m / s
            density = _INV_SQRT_2PI * math.exp(-0.5 * z * z)
            return b - a * m - kappa * math.erf(z / _SQRT2), -a - 2.0 * kappa * density / s

        new_mu = _safeguarded_newton(mu_equation, mu, mu_lo, mu_hi, tol)

        def s_equation(s, m=new_mu):
            z = m / s
            density = _INV_SQRT_2PI * math.exp(-0.5 * z * z)
            value = -a * s - 2.0 * kappa * density + 1.0 / s
            slope = -a - 2.0 * kappa * density * m * m / (s ** 3) - 1.0 / (s * s)
            return value, slope

        new_sdev = _safeguarded_newton(s_equation, sdev, s_lo, s_hi, tol)
        done = abs(new_mu - mu) <= tol * (1.0 + abs(mu)) and abs(new_sdev - sdev) <= tol * sdev
        mu, sdev = new_mu, new_sdev
        if done:
            break
    return mu, sdev


def _initial_state(prior, design, response, init):
    d = prior.dim
    if isinstance(init, SpikeSlabPosterior):
        if init.dim != d:
            raise InputError(f"warm start has dimension {init.dim}, expected {d}")
        return init.mu.copy(), init.sdev.copy(), init.gamma.copy(), init.gamma * init.mu
    if init is None:
        n = design.shape[0]
        penalty = default_penalty(prior.noise_sigma, 1.0, max(d, 1), max(n, 1))
        coefficients = lasso_fit(RegressionProblem(design, response, penalty)).coefficients
    else:
        coefficients = np.asarray(init, dtype=float)
        if coefficients.shape != (d,):
            raise InputError(f"init has shape {coefficients.shape}, expected ({d},)")
    return coefficients.copy(), np.ones(d), np.full(d, 0.5), coefficients


def cavi_fit(
    prior: SpikeSlabPrior,
    design: np.ndarray,
    response: np.ndarray,
    init: Optional[Union[np.ndarray, SpikeSlabPosterior]] = None,
    tol: Optional[float] = None,
    max_sweeps: Optional[int] = None,
) -> SpikeSlabPosterior:
    """Fit the mean-field posterior by coordinate ascent.

    ``init`` may be a coefficient vector (mu = init, s = 1, gamma = 0.5), a
    previous posterior (warm start), or None (lasso initialization).
    Coordinates are visited in decreasing order of the initial |coefficient|.
    """
    design, response = _check_data(design, response, prior.dim)
    tol = settings.cavi_tol if tol is None else tol
    max_sweeps = settings.cavi_offline_sweeps if max_sweeps is None else max_sweeps
    inner_tol = settings.cavi_inner_tol

    mu, sdev, gamma, order_key = _initial_state(prior, design, response, init)
    order = np.argsort(-np.abs(order_key), kind="stable")

    design = np.asfortranarray(design)
    sigma2 = prior.noise_sigma ** 2
    kappa = prior.rate
    base_log_odds = prior.prior_log_odds + math.log(kappa / 2.0)
    curvature = np.einsum("ij,ij->j", design, design) / sigma2
    col_sq = curvature * sigma2
    mean = gamma * mu
    residual = response - design @ mean

    posterior = SpikeSlabPosterior(mu=mu, sdev=sdev, gamma=gamma)
    previous = elbo(prior, design, response, posterior)
    for sweep in range(1, max_sweeps + 1):
        for j in order:
            column = design[:, j]
            old_mean = mean[j]
            b = (column @ residual + col_sq[j] * old_mean) / sigma2
            a = curvature[j]
            m, s = _slab_optimum(a, b, kappa, mu[j], sdev[j], inner_tol)
            z = m / s
            e_abs = s * math.sqrt(2.0 / math.pi) * math.exp(-0.5 * z * z) + m * math.erf(z / _SQRT2)
            log_odds = (
                base_log_odds + b * m - 0.5 * a * (m * m + s * s)
                - kappa * e_abs + _HALF_LOG_2PIE + math.log(s)
            )
            g = float(special.expit(log_odds))
            mu[j], sdev[j], gamma[j] = m, s, g
            new_mean = g * m
            if new_mean != old_mean:
                residual -= (new_mean - old_mean) * column
                mean[j] = new_mean

        current = elbo(prior, design, response, posterior)
        posterior.elbo_trace.append(current)
        posterior.sweeps = sweep
        if abs(current - previous) <= tol * max(abs(current), 1e-12):
            posterior.converged = True
            break
        previous = current

    if not posterior.converged:
        logger.debug("CAVI stopped before convergence", sweeps=posterior.sweeps, dim=prior.dim)
    return posterior


def sample_posterior(posterior: SpikeSlabPosterior, rng: np.random.Generator) -> np.ndarray:
    """One draw from q: each coordinate is N(mu_j, s_j^2) w.p. gamma_j, else 0."""
    include = rng.random(posterior.dim) < posterior.gamma
    draws = posterior.mu + posterior.sdev * rng.standard_normal(posterior.dim)
    return np.where(include, draws, 0.0)


def posterior_mean(posterior: SpikeSlabPosterior) -> np.ndarray:
    return posterior.gamma * posterior.mu


# Prior scaling schedules ------------------------------------------------------


@dataclass(frozen=True)
class TheoryLambda:
    """lambda_t = 11/6 * x_max * sqrt(2 t (log d + log t))."""


@dataclass(frozen=True)
class PracticalSqrt:
    lambda_star: float


@dataclass(frozen=True)
class ConstantLambda:
    value: float = 1.0


LambdaMode = Union[TheoryLambda, PracticalSqrt, ConstantLambda]


def lambda_schedule(t: int, d: int, x_max: float, mode: LambdaMode) -> float:
    if t < 1:
        raise ConfigurationError(f"round index must be >= 1, got {t}")
    if isinstance(mode, TheoryLambda):
        if d < 2:
            raise ConfigurationError("the theory schedule needs d >= 2")
        base = x_max * math.sqrt(2.0 * t * (math.log(d) + math.log(t)))
        return 11.0 / 6.0 * base
    if isinstance(mode, PracticalSqrt):
        return mode.lambda_star * math.sqrt(t)
    return mode.value


# Model-size prior -------------------------------------------------------------


@dataclass(frozen=True)
class SandwichConstants:
    a1: float
    a2: float
    a3: float
    a4: float
    ratios: np.ndarray

    def holds(self, dim: int, slack: float = 1e-12) -> bool:
        lower = self.a1 * dim ** (-self.a3)
        upper = self.a2 * dim ** (-self.a4)
        return bool(np.all(self.ratios >= lower * (1 - slack)) and np.all(self.ratios <= upper * (1 + slack)))


def model_size_prior(dim: int, inclusion_exponent: float = 1.0, a0: float = 1.0) -> np.ndarray:
    """pi_d(s), s = 0..d, induced by independent inclusion with r ~ Beta(a0, d^u)."""
    b0 = float(dim) ** inclusion_exponent
    sizes = np.arange(dim + 1)
    log_binom = special.gammaln(dim + 1) - special.gammaln(sizes + 1) - special.gammaln(dim - sizes + 1)
    log_mass = log_binom + special.betaln(a0 + sizes, b0 + dim - sizes) - special.betaln(a0, b0)
    return np.exp(log_mass)


def complexity_constants(dim: int, inclusion_exponent: float = 1.0, a0: float = 1.0) -> SandwichConstants:
    """Constants with A1 d^-A3 pi(s-1) <= pi(s) <= A2 d^-A4 pi(s-1) for all s."""
    mass = model_size_prior(dim, inclusion_exponent, a0)
    ratios = mass[1:] / mass[:-1]
    scaled = ratios * float(dim) ** inclusion_exponent
    return SandwichConstants(
        a1=float(scaled.min()),
        a2=float(scaled.max()),
        a3=inclusion_exponent,
        a4=inclusion_exponent,
        ratios=ratios,
    )


# Quadrature oracle ------------------------------------------------------------


@dataclass
class ExactPosterior:
    log_evidence: float
    posterior_mean: np.ndarray
    inclusion_probs: np.ndarray
    support_probs: dict


def _axis_rule(center: float, sdev: float, nodes: int):
    lo = min(center, 0.0) - 12.0 * sdev
    hi = max(center, 0.0) + 12.0 * sdev
    breaks = np.unique(np.clip([lo, 0.0, center - 6.0 * sdev, center + 6.0 * sdev, hi], lo, hi))
    base_x, base_w = special.roots_legendre(nodes)
    points, weights = [], []
    for left, right in zip(breaks[:-1], breaks[1:]):
        half = 0.5 * (right - left)
        points.append(left + half * (base_x + 1.0))
        weights.append(half * base_w)
    return np.concatenate(points), np.concatenate(weights)


def exact_posterior(prior: SpikeSlabPrior, design: np.ndarray, response: np.ndarray, nodes: int = 64) -> ExactPosterior:
    """Exact posterior by support enumeration and Gauss-Legendre quadrature (d <= 2)."""
    design, response = _check_data(design, response, prior.dim)
    d = prior.dim
    if d > 2:
        raise ConfigurationError("the quadrature oracle supports d <= 2 only")
    n = design.shape[0]
    sigma = prior.noise_sigma
    kappa = prior.rate
    w = prior.inclusion_prob
    yty = float(response @ response)
    const = -0.5 * n * math.log(2.0 * math.pi * sigma ** 2)

    log_joint, means, supports = [], [], []
    for mask in itertools.product([0, 1], repeat=d):
        support = [j for j in range(d) if mask[j]]
        size = len(support)
        log_prior = size * math.log(w) + (d - size) * math.log1p(-w)
        mean = np.zeros(d)
        if size == 0:
            log_int = const - yty / (2.0 * sigma ** 2)
        else:
            sub = design[:, support]
            gram = sub.T @ sub
            moment = sub.T @ response
            regularized = gram + 1e-10 * np.eye(size)
            center = np.linalg.solve(regularized, moment)
            sdev = sigma * np.sqrt(np.diag(np.linalg.inv(regularized)))
            sdev = np.minimum(sdev, 40.0 / kappa)
            center = np.clip(center, -1e3, 1e3)
            rules = [_axis_rule(center[k], sdev[k], nodes) for k in range(size)]
            grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
            wgrid = np.meshgrid(*[r[1] for r in rules], indexing="ij")
            betas = np.stack([g.ravel() for g in grids], axis=1)
            weights = np.prod(np.stack([g.ravel() for g in wgrid], axis=1), axis=1)
            quad = yty - 2.0 * betas @ moment + np.einsum("pi,ij,pj->p", betas, gram, betas)
            log_f = (
                const - quad / (2.0 * sigma ** 2)
                + size * math.log(kappa / 2.0) - kappa * np.abs(betas).sum(axis=1)
            )
            log_int = float(special.logsumexp(log_f, b=weights))
            posterior_weights = weights * np.exp(log_f - log_int)
            mean[support] = posterior_weights @ betas
        log_joint.append(log_prior + log_int)
        means.append(mean)
        supports.append(tuple(support))

    log_joint = np.asarray(log_joint)
    log_evidence = float(special.logsumexp(log_joint))
    probs = np.exp(log_joint - log_evidence)
    post_mean = np.sum(probs[:, None] * np.asarray(means), axis=0)
    inclusion = np.zeros(d)
    for p, support in zip(probs, supports):
        inclusion[list(support)] += p
    return ExactPosterior(
        log_evidence=log_evidence,
        posterior_mean=post_mean,
        inclusion_probs=inclusion,
        support_probs=dict(zip(supports, probs.tolist())),
    )
