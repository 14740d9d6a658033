"""Incremental SAX/B-tree index for similarity search over data streams."""

from bstree.estimator import BSTreeIndex, SAXTransformer
from bstree.pruning import PruneReport, build_index, lrv_prune
from bstree.query import QueryResult, RangeQuery, ground_truth, precision_recall, range_search
from bstree.sax import SAXConfig, breakpoints, mindist, mindist_envelope, sax_transform, znormalize
from bstree.stream import SlidingWindow, StreamPoint, WindowArchive, WindowRecord, WindowSpec, replay_file, synth_stream
from bstree.tree import BSTree, MBR, MBRCatalog

__version__ = "0.1.0"

__all__ = [
    "BSTree",
    "BSTreeIndex",
    "MBR",
    "MBRCatalog",
    "PruneReport",
    "QueryResult",
    "RangeQuery",
    "SAXConfig",
    "SAXTransformer",
    "SlidingWindow",
    "StreamPoint",
    "WindowArchive",
    "WindowRecord",
    "WindowSpec",
    "breakpoints",
    "build_index",
    "ground_truth",
    "lrv_prune",
    "mindist",
    "mindist_envelope",
    "precision_recall",
    "range_search",
    "replay_file",
    "sax_transform",
    "synth_stream",
    "znormalize",
]
