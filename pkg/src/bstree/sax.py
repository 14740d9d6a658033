"""Symbolic Aggregate approXimation: z-normalization, PAA, discretization and MinDist."""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np
from scipy.special import ndtri

from bstree.exceptions import ConfigError, ShapeError

__all__ = [
    "NormalizedWindow",
    "SAXConfig",
    "SymbolEnvelope",
    "breakpoints",
    "discretize",
    "euclidean",
    "mindist",
    "mindist_envelope",
    "paa",
    "sax_transform",
    "word_codes",
    "znormalize",
]

_OFFSET = ord("a")


@lru_cache(maxsize=None)
def _breakpoints(alpha: int) -> tuple[float, ...]:
    cuts = ndtri(np.arange(1, alpha) / alpha)
    # exact antisymmetry; ndtri is symmetric only to rounding
    half = (alpha - 1) // 2
    for i in range(half):
        cuts[alpha - 2 - i] = -cuts[i]
    if alpha % 2 == 0:
        cuts[alpha // 2 - 1] = 0.0
    return tuple(float(c) for c in cuts)


def breakpoints(alpha: int) -> tuple[float, ...]:
    """Standard normal quantiles at ``i / alpha`` for ``i = 1 .. alpha - 1``."""
    if not isinstance(alpha, (int, np.integer)) or not 2 <= alpha <= 26:
        raise ConfigError(f"alpha must be an integer in [2, 26], got {alpha!r}")
    return _breakpoints(int(alpha))


@dataclass(frozen=True)
class SAXConfig:
    """Discretization parameters shared by every word in one index.

    Parameters
    ----------
    w : int
        Window length in points.
    l : int
        Word length (number of PAA segments). Must divide ``w``.
    alpha : int
        Alphabet size, 2 to 26. Symbols are ``'a'`` onward.
    epsilon_std : float
        Windows whose population std is at or below this are treated as flat.
    """

    w: int
    l: int = 8
    alpha: int = 4
    epsilon_std: float = 1e-12
    breakpoints: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.w < 1 or self.l < 1:
            raise ConfigError(f"w and l must be positive, got w={self.w}, l={self.l}")
        if self.w % self.l:
            raise ConfigError(f"word length l={self.l} must divide window length w={self.w}")
        if not self.epsilon_std > 0:
            raise ConfigError("epsilon_std must be positive")
        object.__setattr__(self, "breakpoints", breakpoints(self.alpha))

    @property
    def scale(self) -> float:
        return math.sqrt(self.w / self.l)

    @cached_property
    def cell_dist_sq(self) -> tuple[tuple[float, ...], ...]:
        """Squared symbol-to-symbol lower-bound distances, indexed by letter codes."""
        beta = self.breakpoints
        rows = []
        for r in range(self.alpha):
            row = []
            for s in range(self.alpha):
                if abs(r - s) <= 1:
                    row.append(0.0)
                else:
                    lo, hi = min(r, s), max(r, s)
                    row.append((beta[hi - 1] - beta[lo]) ** 2)
            rows.append(tuple(row))
        return tuple(rows)

    def check_word(self, word: str) -> None:
        if len(word) != self.l:
            raise ShapeError(f"word {word!r} has length {len(word)}, expected {self.l}")
        top = chr(_OFFSET + self.alpha - 1)
        if any(not ("a" <= ch <= top) for ch in word):
            raise ShapeError(f"word {word!r} uses letters outside 'a'..{top!r}")


@dataclass(frozen=True)
class NormalizedWindow:
    values: np.ndarray
    mean: float
    std: float

    def raw(self) -> np.ndarray:
        """Undo the normalization (flat windows come back as their constant mean)."""
        return self.values * self.std + self.mean


def word_codes(word: str) -> tuple[int, ...]:
    return tuple(b - _OFFSET for b in word.encode("ascii"))


def codes_to_word(codes: Sequence[int]) -> str:
    return "".join(chr(_OFFSET + c) for c in codes)


def znormalize(raw, cfg: SAXConfig) -> NormalizedWindow:
    x = np.asarray(raw, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != cfg.w:
        raise ShapeError(f"expected a window of {cfg.w} values, got shape {x.shape}")
    mean = float(x.mean())
    std = float(x.std())
    if std <= cfg.epsilon_std:
        values = np.zeros_like(x)
    else:
        values = (x - mean) / std
    values.setflags(write=False)
    return NormalizedWindow(values, mean, std)


def paa(nw: NormalizedWindow | np.ndarray, cfg: SAXConfig) -> np.ndarray:
    values = nw.values if isinstance(nw, NormalizedWindow) else np.asarray(nw, dtype=np.float64)
    if values.shape[-1] != cfg.w:
        raise ShapeError(f"expected {cfg.w} values, got {values.shape[-1]}")
    return values.reshape(values.shape[:-1] + (cfg.l, cfg.w // cfg.l)).mean(axis=-1)


def discretize(paa_values: Sequence[float], cfg: SAXConfig) -> str:
    if len(paa_values) != cfg.l:
        raise ShapeError(f"expected {cfg.l} PAA values, got {len(paa_values)}")
    beta = cfg.breakpoints
    return "".join(chr(_OFFSET + bisect_right(beta, float(v))) for v in paa_values)


def sax_transform(raw, cfg: SAXConfig) -> tuple[str, NormalizedWindow]:
    nw = znormalize(raw, cfg)
    return discretize(paa(nw, cfg), cfg), nw


def _check_pair(q: str, c: str, cfg: SAXConfig) -> None:
    if len(q) != len(c):
        raise ShapeError(f"words differ in length: {q!r} vs {c!r}")
    cfg.check_word(q)
    cfg.check_word(c)


def mindist(q: str, c: str, cfg: SAXConfig) -> float:
    _check_pair(q, c, cfg)
    return mindist_codes(word_codes(q), word_codes(c), cfg)


def mindist_codes(q: Sequence[int], c: Sequence[int], cfg: SAXConfig) -> float:
    table = cfg.cell_dist_sq
    return cfg.scale * math.sqrt(sum(table[a][b] for a, b in zip(q, c)))


class SymbolEnvelope:
    """Per-position closed interval ``[lo[i], hi[i]]`` of letter codes."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo: Sequence[int], hi: Sequence[int]):
        if len(lo) != len(hi):
            raise ShapeError("envelope bounds differ in length")
        self.lo = list(lo)
        self.hi = list(hi)

    @classmethod
    def of_word(cls, word: str) -> SymbolEnvelope:
        codes = word_codes(word)
        return cls(codes, codes)

    @classmethod
    def of_words(cls, words) -> SymbolEnvelope:
        env = None
        for word in words:
            if env is None:
                env = cls.of_word(word)
            else:
                env.widen(word_codes(word))
        if env is None:
            raise ValueError("envelope of an empty word set")
        return env

    def copy(self) -> SymbolEnvelope:
        return SymbolEnvelope(self.lo, self.hi)

    def widen(self, codes: Sequence[int]) -> None:
        lo, hi = self.lo, self.hi
        for i, c in enumerate(codes):
            if c < lo[i]:
                lo[i] = c
            elif c > hi[i]:
                hi[i] = c

    def union(self, other: SymbolEnvelope) -> None:
        lo, hi = self.lo, self.hi
        for i, (a, b) in enumerate(zip(other.lo, other.hi)):
            if a < lo[i]:
                lo[i] = a
            if b > hi[i]:
                hi[i] = b

    def contains(self, word: str) -> bool:
        return all(a <= c <= b for a, c, b in zip(self.lo, word_codes(word), self.hi))

    def is_valid(self) -> bool:
        return all(a <= b for a, b in zip(self.lo, self.hi))

    @property
    def min_word(self) -> str:
        return codes_to_word(self.lo)

    @property
    def max_word(self) -> str:
        return codes_to_word(self.hi)

    def __eq__(self, other):
        if not isinstance(other, SymbolEnvelope):
            return NotImplemented
        return self.lo == other.lo and self.hi == other.hi

    def __repr__(self):
        return f"SymbolEnvelope({self.min_word!r}, {self.max_word!r})"


def envelope_dist_codes(q: Sequence[int], env: SymbolEnvelope, cfg: SAXConfig) -> float:
    table = cfg.cell_dist_sq
    total = 0.0
    for c, a, b in zip(q, env.lo, env.hi):
        if c < a - 1:
            total += table[c][a]
        elif c > b + 1:
            total += table[b][c]
    return cfg.scale * math.sqrt(total)


def mindist_envelope(q: str, env: SymbolEnvelope, cfg: SAXConfig) -> float:
    cfg.check_word(q)
    if len(env.lo) != cfg.l or not env.is_valid():
        raise ShapeError(f"invalid envelope {env!r}")
    return envelope_dist_codes(word_codes(q), env, cfg)


def euclidean(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)))
