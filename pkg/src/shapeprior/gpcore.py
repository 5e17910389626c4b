"""Multi-output GP regression on one-hot targets with a constant prior mean.

All output columns share one RBF kernel (unit signal variance) and one
Cholesky factorisation. Length scale and noise are fitted jointly by
maximising the log marginal likelihood in log space.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import linalg, optimize
from scipy.linalg import lapack
from scipy.spatial.distance import cdist

from .errors import NotPositiveDefinite

JITTER_START = 1e-10
JITTER_MAX = 1e-4
NOISE_INIT = 1e-6
NOISE_BOUNDS = (1e-10, 10.0)
LENGTH_BOUNDS_REL = (1e-2, 1e3)
N_RESTARTS = 2


@dataclass(frozen=True)
class GPConfig:
    """Search box and restarts for the hyperparameter fit."""

    length_bounds_rel: Tuple[float, float] = LENGTH_BOUNDS_REL
    noise_bounds: Tuple[float, float] = NOISE_BOUNDS
    noise_init: float = NOISE_INIT
    restarts: int = N_RESTARTS

    def __post_init__(self):
        lo, hi = self.length_bounds_rel
        nlo, nhi = self.noise_bounds
        if not (0 < lo <= 1 <= hi):
            raise ValueError("length_bounds_rel must bracket 1")
        if not (0 < nlo <= self.noise_init <= nhi):
            raise ValueError("noise_init must lie inside noise_bounds")
        if self.restarts < 0:
            raise ValueError("restarts must be >= 0")

_LOG_2PI = math.log(2.0 * math.pi)


def rbf(x, x2, length_scale: float) -> float:
    x, x2 = np.asarray(x, dtype=float), np.asarray(x2, dtype=float)
    if x.shape != x2.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {x2.shape}")
    if not length_scale > 0:
        raise ValueError("length scale must be positive")
    d2 = float(np.sum((x - x2) ** 2))
    return math.exp(-d2 / (2.0 * length_scale**2))


def sq_dists(A: np.ndarray, B: Optional[np.ndarray] = None) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = A if B is None else np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    D = cdist(A, B, "sqeuclidean")
    if B is A:
        np.fill_diagonal(D, 0.0)
    return D


def rbf_kernel(A, B=None, length_scale: float = 1.0) -> np.ndarray:
    return np.exp(-sq_dists(A, B) / (2.0 * length_scale**2))


def one_hot(labels: Sequence[int], C: int) -> np.ndarray:
    y = np.asarray(labels, dtype=int)
    if y.size and (y.min() < 0 or y.max() >= C):
        raise ValueError(f"labels must lie in [0, {C})")
    Y = np.zeros((y.size, C))
    Y[np.arange(y.size), y] = 1.0
    return Y


def cholesky_jitter(K: np.ndarray) -> Tuple[np.ndarray, float]:
    """Lower Cholesky factor of ``K``, adding diagonal jitter if needed.

    Jitter starts at 1e-10 and grows tenfold up to 1e-4.
    """
    jitter = 0.0
    while True:
        try:
            Kj = K if jitter == 0.0 else K + jitter * np.eye(len(K))
            return linalg.cholesky(Kj, lower=True, check_finite=False), jitter
        except linalg.LinAlgError:
            jitter = JITTER_START if jitter == 0.0 else jitter * 10.0
            if jitter > JITTER_MAX * (1 + 1e-9):
                raise NotPositiveDefinite(
                    f"kernel matrix not positive definite after jitter up to {JITTER_MAX:g}"
                ) from None


def _centered(Y, mean, n):
    Y = np.asarray(Y, dtype=float).reshape(n, -1)
    return Y - np.asarray(mean, dtype=float).reshape(1, -1)


def _lml_terms(D2, Yc, length_scale, noise, grad=False):
    n, C = Yc.shape
    K = np.exp(-D2 / (2.0 * length_scale**2))
    Kl = K + noise * np.eye(n)
    L, _ = cholesky_jitter(Kl)
    A = linalg.cho_solve((L, True), Yc, check_finite=False)
    value = -0.5 * float(np.sum(Yc * A)) - C * float(np.sum(np.log(np.diag(L)))) - 0.5 * n * C * _LOG_2PI
    if not grad:
        return value, None, L, A
    Kinv, info = lapack.dpotri(L, lower=1)
    if info != 0:
        raise NotPositiveDefinite(f"potri failed with info={info}")
    Kinv = np.tril(Kinv) + np.tril(Kinv, -1).T
    W = A @ A.T - C * Kinv
    dK_dlogl = K * D2 / length_scale**2
    g_l = 0.5 * float(np.sum(W * dK_dlogl))
    g_noise = 0.5 * noise * float(np.trace(W))
    return value, np.array([g_l, g_noise]), L, A


def log_marginal_likelihood(X, Y, mean, length_scale: float, noise: float) -> float:
    """Log evidence summed over output columns sharing one kernel."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    if n == 0:
        raise ValueError("need at least one training point")
    Yc = _centered(Y, mean, n)
    return _lml_terms(sq_dists(X), Yc, length_scale, noise)[0]


def lml_gradient(X, Y, mean, length_scale: float, noise: float) -> Tuple[float, np.ndarray]:
    """Value and gradient with respect to ``(log length_scale, log noise)``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Yc = _centered(Y, mean, X.shape[0])
    value, g, _, _ = _lml_terms(sq_dists(X), Yc, length_scale, noise, grad=True)
    return value, g


@dataclass(frozen=True)
class GPModel:
    X: np.ndarray
    mean: np.ndarray
    length_scale: float
    noise: float
    chol: np.ndarray = field(repr=False)
    A: np.ndarray = field(repr=False)
    lml: float = float("nan")
    lml_init: float = float("nan")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def n_classes(self) -> int:
        return self.mean.size

    def predict_scores(self, x) -> np.ndarray:
        """Posterior mean scores; a single vector gives a 1-D result."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        Xs = np.atleast_2d(x)
        if self.n == 0:
            scores = np.tile(self.mean, (Xs.shape[0], 1))
        else:
            if Xs.shape[1] != self.X.shape[1]:
                raise ValueError(f"dimension mismatch: {Xs.shape[1]} vs {self.X.shape[1]}")
            scores = self.mean + rbf_kernel(Xs, self.X, self.length_scale) @ self.A
        return scores[0] if single else scores

    def predict_class(self, x) -> np.ndarray:
        # np.argmax returns the first maximum, i.e. the lowest class index
        s = self.predict_scores(x)
        return np.argmax(s, axis=-1)

    def summary(self) -> dict:
        return {
            "length_scale": self.length_scale,
            "noise": self.noise,
            "n": self.n,
            "C": self.n_classes,
            "prior_mean": [float(v) for v in self.mean],
            "log_marginal_likelihood": self.lml,
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2)


def _empty_model(mean, dim) -> GPModel:
    return GPModel(
        X=np.zeros((0, dim)),
        mean=np.asarray(mean, dtype=float).copy(),
        length_scale=float("nan"),
        noise=float("nan"),
        chol=np.zeros((0, 0)),
        A=np.zeros((0, np.size(mean))),
    )


def fit_fixed(X, Y, mean, length_scale: float, noise: float) -> GPModel:
    """Condition on the data with given hyperparameters (no optimisation)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    mean = np.asarray(mean, dtype=float)
    if X.shape[0] == 0:
        return _empty_model(mean, X.shape[1])
    Yc = _centered(Y, mean, X.shape[0])
    value, _, L, A = _lml_terms(sq_dists(X), Yc, length_scale, noise)
    return GPModel(X, mean.copy(), float(length_scale), float(noise), L, A, value, value)


def fit(X, Y, mean, length_scale0: float, seed: int = 0, cfg: GPConfig = GPConfig()) -> GPModel:
    """Maximum-likelihood fit of length scale and noise.

    Local L-BFGS-B search from ``(length_scale0, 1e-6)`` plus ``cfg.restarts``
    seeded uniform starts inside the log-box (by default
    ``length in [1e-2, 1e3] * length_scale0``, ``noise in [1e-10, 10]``).
    The returned likelihood is never below the starting point's.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    mean = np.asarray(mean, dtype=float)
    n = X.shape[0]
    if n == 0:
        return _empty_model(mean, X.shape[1])
    if not length_scale0 > 0:
        raise ValueError("initial length scale must be positive")
    D2 = sq_dists(X)
    Yc = _centered(Y, mean, n)

    rel_lo, rel_hi = cfg.length_bounds_rel
    bounds = [
        (math.log(rel_lo * length_scale0), math.log(rel_hi * length_scale0)),
        (math.log(cfg.noise_bounds[0]), math.log(cfg.noise_bounds[1])),
    ]

    def objective(theta):
        try:
            v, g, _, _ = _lml_terms(D2, Yc, math.exp(theta[0]), math.exp(theta[1]), grad=True)
        except NotPositiveDefinite:
            return 1e300, np.zeros(2)
        return -v, -g

    theta0 = np.array([math.log(length_scale0), math.log(cfg.noise_init)])
    init_value = -objective(theta0)[0]
    rng = np.random.default_rng(seed)
    starts = [theta0] + [
        np.array([rng.uniform(lo, hi) for lo, hi in bounds]) for _ in range(cfg.restarts)
    ]
    best_theta, best_value = theta0, init_value
    for start in starts:
        res = optimize.minimize(objective, start, jac=True, method="L-BFGS-B", bounds=bounds)
        theta = np.clip(res.x, [b[0] for b in bounds], [b[1] for b in bounds])
        value = -objective(theta)[0]
        if value > best_value:
            best_theta, best_value = theta, value

    ls, noise = math.exp(best_theta[0]), math.exp(best_theta[1])
    value, _, L, A = _lml_terms(D2, Yc, ls, noise)
    return GPModel(X, mean.copy(), ls, noise, L, A, value, init_value)


def mean_pairwise_distance(X) -> float:
    """Mean Euclidean distance over distinct pairs of rows."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    if n < 2:
        return float("nan")
    D = np.sqrt(sq_dists(X))
    return float(D[np.triu_indices(n, k=1)].mean())
