"""Least-recently-visited pruning and the incremental build loop."""

from __future__ import annotations

import csv
import io
import logging
import math
import warnings
from dataclasses import astuple, dataclass, fields
from typing import Callable, Iterable

from bstree.tree import MBR, BSTree, VisitClock

logger = logging.getLogger(__name__)

__all__ = ["PruneReport", "build_index", "lrv_decisions", "lrv_prune", "touch"]

KEEP, BRIDGE, PRUNE = "keep", "bridge", "prune"


class NoProgressWarning(RuntimeWarning):
    """Pruning removed nothing and the tree is still above its height limit."""


@dataclass
class PruneReport:
    clock: int = 0
    visited: int = 0
    kept: int = 0
    pruned: int = 0
    bridges: int = 0
    old_height: int = 0
    new_height: int = 0

    @classmethod
    def csv_header(cls) -> str:
        return ",".join(f.name for f in fields(cls))

    def csv_row(self) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="").writerow(astuple(self))
        return buf.getvalue()


def touch(element: MBR, clock: VisitClock) -> None:
    element.ts = clock.counter


def lrv_decisions(timestamps: list[int], threshold: float) -> list[str]:
    """Classify each element of a depth-first sequence as keep, bridge or prune.

    An element at or above ``threshold`` is kept. A stale element is kept as a
    bridge when the next element in the sequence is fresher than it, otherwise it
    is pruned. The last element has no successor and cannot be a bridge.
    """
    out = []
    for i, ts in enumerate(timestamps):
        nxt = timestamps[i + 1] if i + 1 < len(timestamps) else -math.inf
        if ts >= threshold:
            out.append(KEEP)
        elif ts < nxt:
            out.append(BRIDGE)
        else:
            out.append(PRUNE)
    return out


def lrv_prune(tree: BSTree, tmpth: float, mode: str = "absolute") -> tuple[BSTree, PruneReport]:
    """Prune stale branches and rebuild the survivors into a fresh balanced tree.

    In ``absolute`` mode an element is fresh when ``ts >= tmpth``. In ``age``
    mode it is fresh when ``clock - ts <= tmpth``. The returned tree shares the
    surviving MBR objects (members and postings intact) with every timestamp and
    the clock reset to zero; ``tree`` itself must not be used afterwards.
    """
    if mode == "absolute":
        threshold = tmpth
    elif mode == "age":
        threshold = tree.clock.counter - tmpth
    else:
        raise ValueError(f"unknown prune mode {mode!r}")
    sequence = list(tree.preorder())
    decisions = lrv_decisions([e.ts for e in sequence], threshold)
    report = PruneReport(clock=tree.clock.counter, visited=len(sequence), old_height=tree.height)
    fresh = tree.empty_like()
    for mbr, decision in zip(sequence, decisions):
        if decision == PRUNE:
            report.pruned += 1
            continue
        report.kept += 1
        report.bridges += decision == BRIDGE
        mbr.ts = 0
        fresh.insert_mbr(mbr)
    report.new_height = fresh.height
    logger.debug("lrv prune: %s", report)
    return fresh, report


def build_index(
    tree: BSTree,
    features: Iterable,
    htree: int,
    tmpth: float,
    *,
    mode: str = "absolute",
    on_insert: Callable[[BSTree], None] | None = None,
    on_prune: Callable[[BSTree, PruneReport], None] | None = None,
) -> BSTree:
    """Insert features until the height passes ``htree``, prune, and carry on.

    ``features`` yields ``(word, record)`` pairs (or anything with a
    ``window_id`` as the second item). The loop runs until the source is
    exhausted and returns the tree in use at that point, which may be a new
    object after a prune. ``on_insert`` is called after every insertion and
    ``on_prune`` after every prune with the replacement tree, so callers can
    swap their reference and interleave queries.

    If a prune removes nothing and the tree is still too tall, a
    :class:`NoProgressWarning` is issued and the limit is raised by one until
    the next prune that makes progress.
    """
    if htree < 1:
        raise ValueError(f"htree must be at least 1, got {htree}")
    if tmpth < 0:
        raise ValueError(f"tmpth must be non-negative, got {tmpth}")
    limit = htree
    for word, record in features:
        window_id = getattr(record, "window_id", record)
        tree.insert(word, window_id)
        if on_insert is not None:
            on_insert(tree)
        while tree.height > limit:
            tree, report = lrv_prune(tree, tmpth, mode)
            if on_prune is not None:
                on_prune(tree, report)
            if report.pruned:
                limit = htree
            elif tree.height > limit:
                warnings.warn(
                    f"pruning removed nothing at height {tree.height} > {limit}; "
                    "raising the height limit by one for this cycle",
                    NoProgressWarning,
                    stacklevel=2,
                )
                limit += 1
    return tree
