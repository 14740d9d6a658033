"""scikit-learn style wrappers: a SAX transformer and a streaming BSTree index estimator."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from bstree.pruning import PruneReport, build_index, lrv_prune
from bstree.query import APPROXIMATE, QueryResult, RangeQuery, range_search
from bstree.sax import SAXConfig, discretize, paa, znormalize
from bstree.stream import SlidingWindow, StreamPoint, WindowArchive, WindowSpec
from bstree.tree import BSTree, MBRCatalog

__all__ = ["BSTreeIndex", "SAXTransformer", "check_stream"]


def check_stream(X) -> np.ndarray:
    """Validate a stream given as a 1-D array (or a single row/column) of finite reals."""
    arr = np.asarray(X)
    if arr.ndim == 2 and 1 in arr.shape:
        arr = arr.ravel()
    return check_array(arr, ensure_2d=False, dtype=np.float64, ensure_min_samples=0)


class SAXTransformer(TransformerMixin, BaseEstimator):
    """Map windows (rows of ``X``) to SAX words.

    Parameters
    ----------
    word_length : int, default=8
        Number of PAA segments; must divide the row length.
    alpha : int, default=4
        Alphabet size.
    epsilon_std : float, default=1e-12
        Rows with population std at or below this discretize as flat.

    Examples
    --------
    >>> SAXTransformer(word_length=2, alpha=3).fit_transform([[0, 0, 10, 10]])
    array(['ac'], dtype='<U2')
    """

    def __init__(self, word_length=8, alpha=4, epsilon_std=1e-12):
        self.word_length = word_length
        self.alpha = alpha
        self.epsilon_std = epsilon_std

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        self.config_ = SAXConfig(X.shape[1], self.word_length, self.alpha, self.epsilon_std)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "config_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        cfg = self.config_
        words = [discretize(paa(znormalize(row, cfg), cfg), cfg) for row in X]
        return np.asarray(words, dtype=f"<U{cfg.l}")


class BSTreeIndex(BaseEstimator):
    """Incremental similarity index over a data stream.

    ``fit`` indexes a fresh stream and ``partial_fit`` keeps feeding the same
    stream. Each window of ``window`` points becomes a SAX word inserted into a
    BSTree; whenever the tree grows past ``htree`` levels it is pruned with the
    least-recently-visited rule and rebuilt.

    Parameters
    ----------
    window : int, default=64
        Window length ``w``.
    slide : int or None, default=None
        Points between consecutive windows; None means ``window`` (tumbling).
    word_length : int, default=8
    alpha : int, default=4
    order : int, default=32
        B-tree order (maximum children per node).
    mbr_capacity : int, default=64
        Words per catalog range.
    htree : int, default=4
        Maximum tree height before pruning.
    tmpth : float, default=1
        Pruning threshold on element timestamps.
    prune_mode : {"absolute", "age"}, default="absolute"
    archive_capacity : int or None, default=None
        Windows kept for exact verification; None keeps all of them.

    Attributes
    ----------
    tree_ : BSTree
    archive_ : WindowArchive
    prune_log_ : list of PruneReport
    """

    def __init__(
        self,
        window=64,
        slide=None,
        word_length=8,
        alpha=4,
        order=32,
        mbr_capacity=64,
        htree=4,
        tmpth=1,
        prune_mode="absolute",
        archive_capacity=None,
    ):
        self.window = window
        self.slide = slide
        self.word_length = word_length
        self.alpha = alpha
        self.order = order
        self.mbr_capacity = mbr_capacity
        self.htree = htree
        self.tmpth = tmpth
        self.prune_mode = prune_mode
        self.archive_capacity = archive_capacity

    def _initialize(self):
        self.config_ = SAXConfig(self.window, self.word_length, self.alpha)
        self.spec_ = WindowSpec(self.window, self.slide)
        self.archive_ = WindowArchive(self.archive_capacity)
        self.catalog_ = MBRCatalog(self.config_, self.mbr_capacity)
        self.tree_ = BSTree(self.config_, self.order, self.mbr_capacity, self.catalog_)
        self.window_ = SlidingWindow(self.spec_, self.config_, self.archive_)
        self.prune_log_: list[PruneReport] = []
        self.n_points_ = 0

    def fit(self, X, y=None):
        self._initialize()
        return self.partial_fit(X)

    def partial_fit(self, X, y=None):
        if not hasattr(self, "tree_"):
            self._initialize()
        values = check_stream(X)
        start = self.n_points_
        self.n_points_ += len(values)
        points = (StreamPoint(start + i, v) for i, v in enumerate(values.tolist()))
        self.tree_ = build_index(
            self.tree_,
            self.window_.extend(points),
            self.htree,
            self.tmpth,
            mode=self.prune_mode,
            on_prune=lambda tree, report: self.prune_log_.append(report),
        )
        return self

    def prune(self, tmpth=None) -> PruneReport:
        """Force one pruning pass now."""
        check_is_fitted(self, "tree_")
        tmpth = self.tmpth if tmpth is None else tmpth
        self.tree_, report = lrv_prune(self.tree_, tmpth, self.prune_mode)
        self.prune_log_.append(report)
        return report

    def range_query(self, pattern, radius, mode=APPROXIMATE, touch=True) -> QueryResult:
        check_is_fitted(self, "tree_")
        return range_search(self.tree_, RangeQuery(pattern, radius, mode), self.archive_, touch=touch)

    def predict(self, X, radius=0.5, mode=APPROXIMATE):
        """Matching window ids for each row of ``X`` treated as a query pattern."""
        X = check_array(X, dtype=np.float64)
        return [sorted(self.range_query(row, radius, mode).matches) for row in X]

    @property
    def height_(self) -> int:
        check_is_fitted(self, "tree_")
        return self.tree_.height
