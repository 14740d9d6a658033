"""Range similarity search over a BSTree."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from bstree.exceptions import ConfigError, ShapeError, WindowEvicted
from bstree.sax import SAXConfig, envelope_dist_codes, sax_transform, word_codes, znormalize
from bstree.stream import WindowArchive
from bstree.tree import BSTree

__all__ = ["QueryResult", "RangeQuery", "ground_truth", "precision_recall", "range_search"]

APPROXIMATE, EXACT = "approximate", "exact"

# slack on the lower-bound tests so float rounding never dismisses a true match
_SLACK = 1e-9


@dataclass(frozen=True)
class RangeQuery:
    pattern: np.ndarray
    radius: float
    mode: str = APPROXIMATE

    def __post_init__(self):
        object.__setattr__(self, "pattern", np.asarray(self.pattern, dtype=np.float64))
        if self.pattern.ndim != 1:
            raise ShapeError("query pattern must be one-dimensional")
        if not (math.isfinite(self.radius) and self.radius >= 0):
            raise ConfigError(f"radius must be finite and non-negative, got {self.radius}")
        if self.mode not in (APPROXIMATE, EXACT):
            raise ConfigError(f"mode must be {APPROXIMATE!r} or {EXACT!r}, got {self.mode!r}")


@dataclass
class QueryResult:
    """Outcome of one range query.

    ``matches`` holds window ids: every candidate posting in approximate mode,
    only the verified ones in exact mode. ``words`` maps each candidate word to
    its postings. ``unverified`` lists candidate windows the archive had already
    evicted (exact mode only); they are not in ``matches``.
    """

    mode: str
    query_word: str
    matches: set[int] = field(default_factory=set)
    words: dict[str, list[int]] = field(default_factory=dict)
    unverified: list[int] = field(default_factory=list)
    candidates_examined: int = 0
    nodes_visited: int = 0
    elements_visited: int = 0
    elapsed: float = 0.0


def range_search(
    tree: BSTree,
    query: RangeQuery,
    archive: WindowArchive | None = None,
    cfg: SAXConfig | None = None,
    touch: bool = True,
) -> QueryResult:
    """Find stored windows within ``query.radius`` of ``query.pattern``.

    Distances are Euclidean between z-normalized windows. Subtrees and MBRs are
    skipped when their symbol envelope lower bound exceeds the radius, so no
    qualifying window is missed. With ``touch`` (the default) the clock advances
    once and every MBR entered gets the new clock value as its timestamp;
    ``touch=False`` gives a read-only search.
    """
    start = time.perf_counter()
    if cfg is not None and cfg != tree.cfg:
        raise ConfigError("query config does not match the tree's SAX config")
    cfg = tree.cfg
    if query.pattern.shape[0] != cfg.w:
        raise ShapeError(f"pattern has {query.pattern.shape[0]} values, expected {cfg.w}")
    if query.mode == EXACT and archive is None:
        raise ConfigError("exact mode needs the window archive")
    word, qnorm = sax_transform(query.pattern, cfg)
    q = word_codes(word)
    result = QueryResult(query.mode, word)
    now = tree.clock.tick() if touch else None
    r = query.radius + _SLACK
    table = cfg.cell_dist_sq
    scale_sq = cfg.scale**2
    limit_sq = (r * r) / scale_sq

    stack = [tree.root] if tree.height else []
    while stack:
        node = stack.pop()
        if envelope_dist_codes(q, node.envelope, cfg) > r:
            continue
        result.nodes_visited += 1
        for mbr in node.elements:
            if envelope_dist_codes(q, mbr.envelope, cfg) > r:
                continue
            result.elements_visited += 1
            if now is not None:
                mbr.ts = now
            for member in mbr.members:
                total = 0.0
                for a, b in zip(q, member.encode("ascii")):
                    total += table[a][b - 97]
                if total <= limit_sq:
                    result.words[member] = mbr.postings[member]
        stack.extend(reversed(node.children))

    candidate_ids = [wid for posting in result.words.values() for wid in posting]
    result.candidates_examined = len(candidate_ids)
    if query.mode == APPROXIMATE:
        result.matches = set(candidate_ids)
    else:
        for wid in candidate_ids:
            try:
                rec = archive.get(wid)
            except WindowEvicted:
                result.unverified.append(wid)
                continue
            if _distance(rec.normalized.values, qnorm.values) <= query.radius:
                result.matches.add(wid)
    result.elapsed = time.perf_counter() - start
    return result


def _distance(windows: np.ndarray, q: np.ndarray):
    # same expression for the scan and the verifier so both agree bit for bit
    return np.sqrt(((windows - q) ** 2).sum(axis=-1))


def precision_recall(result, truth) -> tuple[float, float]:
    """Precision and recall of ``result`` (a QueryResult or id collection) against ``truth``.

    Precision is 1 for an empty result and recall is 1 for an empty truth set.
    """
    found = result.matches if isinstance(result, QueryResult) else set(result)
    truth = set(truth)
    hit = len(found & truth)
    precision = hit / len(found) if found else 1.0
    recall = hit / len(truth) if truth else 1.0
    return precision, recall


def distances_to_archive(archive: WindowArchive, pattern, cfg: SAXConfig) -> tuple[np.ndarray, np.ndarray]:
    """Window ids and exact z-normalized Euclidean distances from ``pattern`` to every archived window."""
    qn = znormalize(pattern, cfg).values
    ids, mat = archive.matrix()
    if not len(ids):
        return ids, np.empty(0)
    return ids, _distance(mat, qn)


def ground_truth(archive: WindowArchive, pattern, radius: float, cfg: SAXConfig) -> set[int]:
    """Brute-force scan: ids of archived windows within ``radius`` of ``pattern``."""
    ids, dist = distances_to_archive(archive, pattern, cfg)
    return set(ids[dist <= radius].tolist())
