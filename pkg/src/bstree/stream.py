"""Sliding-window feature extraction over a point stream, plus the raw-window archive."""

from __future__ import annotations

import logging
import math
import threading
from collections import OrderedDict, deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from bstree.exceptions import ConfigError, ShapeError, StreamOrderError, StreamParseError, WindowEvicted
from bstree.sax import NormalizedWindow, SAXConfig, sax_transform

logger = logging.getLogger(__name__)

__all__ = [
    "SlidingWindow",
    "StreamPoint",
    "WindowArchive",
    "WindowRecord",
    "WindowSpec",
    "read_stream_file",
    "replay_file",
    "synth_stream",
]


class StreamPoint(NamedTuple):
    seq: int
    value: float


@dataclass(frozen=True)
class WindowSpec:
    w: int
    slide: int | None = None

    def __post_init__(self):
        if self.w < 1:
            raise ConfigError(f"window length must be positive, got {self.w}")
        if self.slide is None:
            object.__setattr__(self, "slide", self.w)
        if not 1 <= self.slide <= self.w:
            raise ConfigError(f"slide must lie in [1, {self.w}], got {self.slide}")

    def emission_count(self, n: int) -> int:
        return (n - self.w) // self.slide + 1 if n >= self.w else 0


@dataclass(frozen=True)
class WindowRecord:
    window_id: int
    start_seq: int
    normalized: NormalizedWindow
    word: str


class WindowArchive:
    """Append-only store of window records with oldest-first eviction.

    Reads are safe from several threads while one thread appends. A lookup for an
    id that has been evicted raises :class:`WindowEvicted`; an id never stored
    raises plain ``KeyError``.
    """

    def __init__(self, capacity: int | None = None):
        if capacity is not None and capacity < 1:
            raise ConfigError("archive capacity must be positive")
        self.capacity = capacity
        self._records: OrderedDict[int, WindowRecord] = OrderedDict()
        self._lock = threading.Lock()
        self._next_expected = 0
        self.evicted = 0

    def append(self, record: WindowRecord) -> None:
        with self._lock:
            if record.window_id < self._next_expected:
                raise StreamOrderError(f"window id {record.window_id} is not increasing")
            self._records[record.window_id] = record
            self._next_expected = record.window_id + 1
            if self.capacity is not None:
                while len(self._records) > self.capacity:
                    self._records.popitem(last=False)
                    self.evicted += 1

    def get(self, window_id: int) -> WindowRecord:
        with self._lock:
            try:
                return self._records[window_id]
            except KeyError:
                if 0 <= window_id < self._next_expected:
                    raise WindowEvicted(window_id) from None
                raise

    def __contains__(self, window_id) -> bool:
        return window_id in self._records

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[WindowRecord]:
        with self._lock:
            records = list(self._records.values())
        return iter(records)

    def ids(self) -> list[int]:
        with self._lock:
            return list(self._records)

    def matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """Window ids and the stacked normalized windows, one row per record."""
        records = list(self)
        ids = np.fromiter((r.window_id for r in records), dtype=np.int64, count=len(records))
        if not records:
            return ids, np.empty((0, 0))
        return ids, np.vstack([r.normalized.values for r in records])


class SlidingWindow:
    """Buffers stream points and emits one SAX feature every ``slide`` points.

    >>> cfg = SAXConfig(w=4, l=2, alpha=3)
    >>> sw = SlidingWindow(WindowSpec(4), cfg)
    >>> [sw.push(StreamPoint(i, v)) is None for i, v in enumerate([0, 0, 10])]
    [True, True, True]
    >>> sw.push(StreamPoint(3, 10))[0]
    'ac'
    """

    def __init__(self, spec: WindowSpec, cfg: SAXConfig, archive: WindowArchive | None = None):
        if spec.w != cfg.w:
            raise ConfigError(f"window spec w={spec.w} does not match SAX config w={cfg.w}")
        self.spec = spec
        self.cfg = cfg
        self.archive = archive
        self._values: deque[float] = deque(maxlen=spec.w)
        self._seqs: deque[int] = deque(maxlen=spec.w)
        self._seen = 0
        self._last_seq: int | None = None
        self.next_window_id = 0

    def push(self, point: StreamPoint) -> tuple[str, WindowRecord] | None:
        seq, value = point
        if self._last_seq is not None and seq <= self._last_seq:
            raise StreamOrderError(f"point seq {seq} arrived after {self._last_seq}")
        if seq < 0:
            raise StreamOrderError(f"negative seq {seq}")
        self._last_seq = seq
        self._values.append(float(value))
        self._seqs.append(seq)
        self._seen += 1
        if self._seen < self.spec.w or (self._seen - self.spec.w) % self.spec.slide:
            return None
        word, nw = sax_transform(np.fromiter(self._values, dtype=np.float64, count=self.spec.w), self.cfg)
        record = WindowRecord(self.next_window_id, self._seqs[0], nw, word)
        self.next_window_id += 1
        if self.archive is not None:
            self.archive.append(record)
        return word, record

    def extend(self, points: Iterable[StreamPoint]) -> Iterator[tuple[str, WindowRecord]]:
        for point in points:
            feature = self.push(point)
            if feature is not None:
                yield feature


def _as_points(values: Iterable[float], start: int = 0) -> Iterator[StreamPoint]:
    for i, v in enumerate(values, start):
        yield StreamPoint(i, v)


def read_stream_file(path, drop_first_column: bool = False) -> np.ndarray:
    """Parse a numeric stream file into a flat float64 array.

    One or more whitespace- or comma-separated reals per line; blank lines and
    lines starting with ``#`` are skipped. Multi-row files (UCR style) are
    flattened row-major, optionally without their leading class-label column.
    """
    path = Path(path)
    out: list[float] = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            fields = text.replace(",", " ").split()
            if drop_first_column:
                fields = fields[1:]
            for tok in fields:
                try:
                    v = float(tok)
                except ValueError:
                    raise StreamParseError(path, lineno, f"not a number: {tok!r}") from None
                if not math.isfinite(v):
                    raise StreamParseError(path, lineno, f"non-finite value {tok!r}")
                out.append(v)
    return np.asarray(out, dtype=np.float64)


def replay_file(
    path,
    spec: WindowSpec,
    cfg: SAXConfig,
    archive: WindowArchive | None = None,
    drop_first_column: bool = False,
) -> Iterator[tuple[str, WindowRecord]]:
    """Yield the features produced by pushing every value of ``path`` in order.

    The whole file is parsed before the first feature is yielded, so a malformed
    line surfaces as :class:`StreamParseError` without partial output.
    """
    values = read_stream_file(path, drop_first_column=drop_first_column)
    return SlidingWindow(spec, cfg, archive).extend(_as_points(values))


def synth_values(kind: str, n: int, seed=None) -> np.ndarray:
    if n < 0:
        raise ShapeError("n must be non-negative")
    rng = np.random.default_rng(seed)
    if kind in ("random-walk", "walk"):
        return np.cumsum(rng.standard_normal(n))
    if kind in ("sine-with-noise", "sine"):
        t = np.arange(n)
        period = 64.0
        return np.sin(2 * np.pi * t / period) + 0.1 * rng.standard_normal(n)
    raise ConfigError(f"unknown synthetic stream kind {kind!r}")


def synth_stream(kind: str, n: int, seed=None) -> Iterator[StreamPoint]:
    """Deterministic synthetic stream: ``random-walk`` (unit Gaussian steps) or
    ``sine-with-noise`` (period 64, noise sigma 0.1)."""
    return _as_points(synth_values(kind, n, seed))
