"""Lempel-Ziv (1976) complexity of binary strings.

The phrase count follows the Kaspar-Schuster scan of the exhaustive
production history; a trailing incomplete phrase counts as one phrase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Union

from .errors import EmptyShape

BinaryLike = Union[str, Iterable[int]]

__all__ = [
    "ComplexityEstimate",
    "as_binary",
    "clz",
    "lz76_phrase_count",
    "shape_to_binary",
]


def as_binary(bits: BinaryLike) -> str:
    """Normalise ``bits`` to a non-empty string over ``{'0', '1'}``."""
    s = bits if isinstance(bits, str) else "".join(str(int(b)) for b in bits)
    if not s:
        raise ValueError("binary string must be non-empty")
    if s.strip("01"):
        raise ValueError(f"binary string contains symbols other than 0/1: {s!r}")
    return s


def lz76_phrase_count(bits: BinaryLike) -> int:
    """Number of phrases in the LZ76 exhaustive history of ``bits``.

    >>> lz76_phrase_count("0101")
    3
    """
    s = as_binary(bits)
    n = len(s)
    if n == 1:
        return 1
    c, l = 1, 1  # phrase count; start of the current phrase
    i, k, k_max = 0, 1, 1
    while True:
        if s[i + k - 1] == s[l + k - 1]:
            k += 1
            if l + k > n:
                c += 1
                break
        else:
            k_max = max(k, k_max)
            i += 1
            if i == l:
                c += 1
                l += k_max
                if l + 1 > n:
                    break
                i, k, k_max = 0, 1, 1
            else:
                k = 1
    return c


@dataclass(frozen=True)
class ComplexityEstimate:
    raw_clz: float
    nw_forward: int
    nw_reverse: int
    n: int


def clz(bits: BinaryLike) -> ComplexityEstimate:
    """Symmetrised LZ complexity, with constant strings scored ``log2(n)``."""
    s = as_binary(bits)
    n = len(s)
    fwd = lz76_phrase_count(s)
    rev = lz76_phrase_count(s[::-1])
    log_n = math.log2(n)
    if s.count(s[0]) == n:
        raw = log_n
    else:
        raw = log_n * (fwd + rev) / 2.0
    return ComplexityEstimate(raw_clz=raw, nw_forward=fwd, nw_reverse=rev, n=n)


_BRACKET_BITS = str.maketrans({"[": "0", "]": "1"})


def shape_to_binary(shape: str) -> str:
    """Map an abstract shape to bits: ``[`` -> 0, ``]`` -> 1."""
    if not shape:
        raise EmptyShape("abstract shape is empty")
    if shape.strip("[]"):
        raise ValueError(f"not a bracket shape: {shape!r}")
    return shape.translate(_BRACKET_BITS)
