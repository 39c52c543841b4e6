"""Log-linear topic-to-word component over fixed word vectors.

A topic vector ``tau_t`` scores every word by ``tau_t . omega_w``; the word
distribution is the softmax of those scores. Topic vectors are refit each
sweep by minimizing an L2-regularized negative log likelihood of the words
currently attributed to the latent-feature component.
"""

from __future__ import annotations

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

logger = logging.getLogger(__name__)


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class OptConfig:
    history: int = 10
    tol: float = 1e-5
    max_iter: int = 100


def cate_log_distribution(tau_t: np.ndarray, omega: np.ndarray) -> np.ndarray:
    scores = omega @ tau_t
    return scores - logsumexp(scores)


def cate_distribution(tau_t: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """Softmax of the word scores ``omega @ tau_t`` (max-shifted)."""
    scores = omega @ tau_t
    p = np.exp(scores - scores.max())
    return p / p.sum()


def cate_table(tau: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """T x V matrix of log CatE probabilities, one row per topic."""
    scores = tau @ omega.T
    return scores - logsumexp(scores, axis=1, keepdims=True)


def _nll_and_grad(tau_t, k_row, k_total, omega, mu):
    scores = omega @ tau_t
    log_z = logsumexp(scores)
    p = np.exp(scores - log_z)
    nll = -(k_row @ scores - k_total * log_z) + mu * (tau_t @ tau_t)
    grad = -(omega.T @ k_row - k_total * (omega.T @ p)) + 2.0 * mu * tau_t
    return nll, grad


def topic_nll(tau_t, k_row, omega, mu) -> float:
    """Regularized negative log likelihood of one topic's latent-feature counts."""
    k_row = np.asarray(k_row, dtype=np.float64)
    return float(_nll_and_grad(np.asarray(tau_t, dtype=np.float64), k_row, k_row.sum(), omega, mu)[0])


def topic_nll_gradient(tau_t, k_row, omega, mu) -> np.ndarray:
    k_row = np.asarray(k_row, dtype=np.float64)
    return _nll_and_grad(np.asarray(tau_t, dtype=np.float64), k_row, k_row.sum(), omega, mu)[1]


@dataclass
class TopicFit:
    tau_t: np.ndarray
    objective: float
    grad_norm: float
    converged: bool


def fit_topic_vector(tau_t, k_row, omega, mu, cfg: OptConfig = OptConfig()) -> TopicFit:
    """L-BFGS minimization of one topic's objective, warm-started at ``tau_t``.

    Never returns a point with a higher objective than the warm start. The
    optimizer aims for ``||grad|| <= tol`` and runs until the line search can
    no longer resolve progress; the fit counts as converged when
    ``||grad|| <= tol * max(1, sum(k_row))``, since the gradient scales with
    the counts and float64 cannot resolve an absolute 1e-5 on large objectives.
    """
    tau0 = np.asarray(tau_t, dtype=np.float64).copy()
    k_row = np.asarray(k_row, dtype=np.float64)
    k_total = k_row.sum()
    fun = lambda x: _nll_and_grad(x, k_row, k_total, omega, mu)  # noqa: E731

    accept = cfg.tol * max(1.0, k_total)
    f0, g0 = fun(tau0)
    best = TopicFit(tau0, f0, float(np.linalg.norm(g0)), False)
    if best.grad_norm <= cfg.tol:
        best.converged = True
        return best
    res = minimize(fun, tau0, jac=True, method="L-BFGS-B",
                   options={"maxcor": cfg.history, "gtol": cfg.tol / np.sqrt(tau0.size), "ftol": 0.0,
                            "maxiter": cfg.max_iter})
    f1, g1 = fun(res.x)
    if f1 <= best.objective:
        best = TopicFit(res.x, f1, float(np.linalg.norm(g1)), False)
    best.converged = best.grad_norm <= accept
    return best


def map_estimate(tau: np.ndarray, K: np.ndarray, omega: np.ndarray, mu: float,
                 cfg: OptConfig = OptConfig(), threads: int = 1,
                 return_fits: bool = False):
    """Refit every topic vector independently against its row of ``K``.

    Rows that fail to reach the gradient tolerance keep their best iterate
    and raise a ``ConvergenceWarning``.
    """
    T = tau.shape[0]

    def one(t):
        return fit_topic_vector(tau[t], K[t], omega, mu, cfg)

    if threads > 1 and T > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            fits = list(pool.map(one, range(T)))
    else:
        fits = [one(t) for t in range(T)]
    stragglers = [t for t, f in enumerate(fits) if not f.converged]
    if stragglers:
        warnings.warn(f"topic vector fit did not reach tol={cfg.tol} for topics {stragglers}",
                      ConvergenceWarning, stacklevel=2)
    new_tau = np.vstack([f.tau_t for f in fits]) if T else tau.copy()
    if return_fits:
        return new_tau, fits
    return new_tau
