"""Acquisition functions over rank-space predictive distributions.

Lower predicted rank is better, so every acquisition is minimized.
"""

import math
from dataclasses import dataclass

import numpy as np

_SIGMA_FLOOR = 1e-12


@dataclass(frozen=True)
class AcqKind:
    kind: str                 # "average_rank" | "lcb" | "expected_improvement"
    beta: float = 1.0

    def __post_init__(self):
        if self.kind not in ("average_rank", "lcb", "expected_improvement"):
            raise ValueError("unknown acquisition %r" % self.kind)
        if self.beta < 0:
            raise ValueError("beta must be >= 0")


class ExhaustedPoolError(RuntimeError):
    pass


def _phi(u):
    return math.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)


def _Phi(u):
    return 0.5 * (1.0 + math.erf(u / math.sqrt(2.0)))


def acq_average_rank(mu):
    return float(mu)


def acq_lcb(mu, sigma, beta=1.0):
    return float(mu - beta * sigma)


def acq_ei(mu, sigma, mu_best):
    """Negated expected improvement of the rank over the incumbent's rank.

    Closed form of -E[max(0, mu_best - r)] under r ~ N(mu, sigma);
    degenerates to -max(0, mu_best - mu) as sigma -> 0.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma < _SIGMA_FLOOR:
        return -max(0.0, mu_best - mu)
    u = (mu_best - mu) / sigma
    return -((mu_best - mu) * _Phi(u) + sigma * _phi(u))


def evaluate(acq, mu, sigma, mu_best):
    """Vectorized acquisition values for candidate mean/std rank arrays."""
    mu = np.asarray(mu, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    if acq.kind == "average_rank":
        return mu.copy()
    if acq.kind == "lcb":
        return mu - acq.beta * sigma
    return np.array([acq_ei(m, s, mu_best) for m, s in zip(mu, sigma)])


def select_next(alphas):
    """Index of the minimum acquisition value; ties break to smallest index."""
    alphas = np.asarray(alphas, dtype=np.float64)
    if alphas.size == 0:
        raise ExhaustedPoolError("candidate pool is empty")
    if not np.all(np.isfinite(alphas)):
        raise ValueError("non-finite acquisition values")
    return int(np.argmin(alphas))
