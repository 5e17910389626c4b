"""Class priors from estimated shape complexity.

Raw LZ complexities are rescaled to ``[0, m_log2]`` and turned into
probabilities ``2 ** (-a * K - b)``, optionally smoothed by a geometric
mean over neighbours in rank order, then multiplied by ``alpha``.
The result is deliberately left unnormalised.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .errors import ConfigError, EmptyShape
from .lzcomplexity import clz, shape_to_binary
from .rnamap import OPEN_CHAIN

AUTO = "auto"
PRIOR_HEADER = ("shape", "k_raw", "k_scaled", "p_hat")


@dataclass(frozen=True)
class PriorConfig:
    a: float = 1.0
    b: float = 0.0
    alpha: float = 1.0
    m_log2: Union[float, str] = AUTO
    smoothing: bool = True

    def __post_init__(self):
        if not self.a > 0:
            raise ConfigError(f"a must be > 0, got {self.a}")
        if not 0 < self.alpha <= 1:
            raise ConfigError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.m_log2 != AUTO and not float(self.m_log2) > 0:
            raise ConfigError(f"m_log2 must be > 0 or 'auto', got {self.m_log2}")


@dataclass(frozen=True)
class PriorVector:
    shapes: tuple
    k_raw: np.ndarray
    k_scaled: np.ndarray
    p_hat: np.ndarray

    @property
    def sum_total(self) -> float:
        return float(self.p_hat.sum())

    @property
    def top_class(self) -> int:
        return int(np.argmax(self.p_hat))

    def __len__(self):
        return len(self.shapes)


def shape_complexity(shape: str) -> float:
    """Raw complexity of one shape; the open chain has nothing to describe."""
    if shape == OPEN_CHAIN:
        return 0.0
    return clz(shape_to_binary(shape)).raw_clz


def scale_complexities(raw: Sequence[float], m_log2: float) -> np.ndarray:
    """Affine map of ``raw`` onto ``[0, m_log2]``; all-equal input maps to 0."""
    r = np.asarray(raw, dtype=float)
    if r.size == 0:
        raise ValueError("need at least one class")
    if not m_log2 > 0:
        raise ValueError(f"m_log2 must be > 0, got {m_log2}")
    lo, hi = r.min(), r.max()
    if hi == lo:
        return np.zeros_like(r)
    # divide first so the maximum lands on m_log2 exactly
    return (r - lo) / (hi - lo) * m_log2


def raw_prior(k_scaled, cfg: PriorConfig = PriorConfig()) -> np.ndarray:
    k = np.asarray(k_scaled, dtype=float)
    return np.exp2(-cfg.a * k - cfg.b)


def smooth(probs: Sequence[float], keys: Optional[Sequence[str]] = None) -> np.ndarray:
    """Geometric mean of each class with its rank neighbours.

    Classes are ranked by ascending probability (ties by ``keys``, default
    the input position). Interior ranks average three values, the two end
    ranks average two. Output is in the input order.
    """
    p = np.asarray(probs, dtype=float)
    if np.any(p <= 0):
        raise ValueError("smoothing needs strictly positive probabilities")
    C = p.size
    if C <= 1:
        return p.copy()
    if keys is None:
        keys = range(C)
    order = sorted(range(C), key=lambda i: (p[i], keys[i]))
    logs = np.log2(p[order])
    out_sorted = np.empty(C)
    for r in range(C):
        lo, hi = max(r - 1, 0), min(r + 1, C - 1)
        out_sorted[r] = np.exp2(logs[lo : hi + 1].mean())
    out = np.empty(C)
    out[order] = out_sorted
    return out


def resolve_m_log2(shapes: Iterable[str], cfg: PriorConfig) -> float:
    if cfg.m_log2 != AUTO:
        return float(cfg.m_log2)
    longest = max((len(s) for s in shapes if s != OPEN_CHAIN), default=0)
    # a catalogue of only the open chain still needs a positive scale
    return float(max(longest, 1))


def build_prior(catalog, cfg: PriorConfig = PriorConfig()) -> PriorVector:
    """Prior vector aligned with ``catalog`` (a ClassCatalog or shape list)."""
    shapes = tuple(getattr(catalog, "shapes", catalog))
    if not shapes:
        raise ValueError("catalog has no classes")
    for s in shapes:
        if not s:
            raise EmptyShape("catalog contains an empty shape")
    k_raw = np.array([shape_complexity(s) for s in shapes])
    k_scaled = scale_complexities(k_raw, resolve_m_log2(shapes, cfg))
    p = raw_prior(k_scaled, cfg)
    if cfg.smoothing:
        p = smooth(p, keys=shapes)
    return PriorVector(shapes, k_raw, k_scaled, cfg.alpha * p)


def write_prior(path, prior: PriorVector) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PRIOR_HEADER)
        for s, kr, ks, p in zip(prior.shapes, prior.k_raw, prior.k_scaled, prior.p_hat):
            w.writerow([s, repr(float(kr)), repr(float(ks)), repr(float(p))])


def read_prior(path) -> PriorVector:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != PRIOR_HEADER:
        raise ValueError(f"{path}: expected header {','.join(PRIOR_HEADER)}")
    body = rows[1:]
    cols = list(zip(*body)) if body else [(), (), (), ()]
    return PriorVector(
        tuple(cols[0]),
        np.array(cols[1], dtype=float),
        np.array(cols[2], dtype=float),
        np.array(cols[3], dtype=float),
    )
