"""The BSTree: a B-tree of order ``m`` whose elements are lexicographic MBRs of SAX words."""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from pathlib import Path
from typing import Iterator

from bstree.exceptions import ConfigError, DuplicateRangeError, RangeViolation
from bstree.sax import SAXConfig, SymbolEnvelope, codes_to_word, word_codes

__all__ = ["BSTree", "MBR", "MBRCatalog", "Node", "VisitClock"]


class MBRCatalog:
    """Partition of all ``alpha ** l`` words into consecutive ranges of ``c`` words.

    Range ``k`` holds the words of lexicographic rank ``k*c .. k*c + c - 1``. The
    partition is computed from rank arithmetic; :meth:`export` writes it out as
    ``lo<TAB>hi`` lines, and :meth:`from_file` loads an explicit range list.
    """

    def __init__(self, cfg: SAXConfig, capacity: int):
        if capacity < 1:
            raise ConfigError(f"MBR capacity must be positive, got {capacity}")
        self.cfg = cfg
        self.capacity = capacity
        self.universe = cfg.alpha**cfg.l
        self._explicit: list[tuple[str, str]] | None = None
        self._explicit_los: list[str] | None = None

    def __len__(self) -> int:
        if self._explicit is not None:
            return len(self._explicit)
        return -(-self.universe // self.capacity)

    def rank(self, word: str) -> int:
        r = 0
        for c in word_codes(word):
            r = r * self.cfg.alpha + c
        return r

    def unrank(self, rank: int) -> str:
        codes = []
        for _ in range(self.cfg.l):
            rank, c = divmod(rank, self.cfg.alpha)
            codes.append(c)
        return codes_to_word(reversed(codes))

    def range_at(self, index: int) -> tuple[str, str]:
        if self._explicit is not None:
            return self._explicit[index]
        first = index * self.capacity
        last = min(first + self.capacity, self.universe) - 1
        return self.unrank(first), self.unrank(last)

    def lookup(self, word: str) -> tuple[str, str]:
        self.cfg.check_word(word)
        if self._explicit is not None:
            i = bisect_right(self._explicit_los, word) - 1
            lo, hi = self._explicit[i]
            assert lo <= word <= hi, f"catalog file does not cover {word!r}"
            return lo, hi
        return self.range_at(self.rank(word) // self.capacity)

    def ranges(self) -> Iterator[tuple[str, str]]:
        for i in range(len(self)):
            yield self.range_at(i)

    def export(self, path, limit: int = 1_000_000) -> None:
        if len(self) > limit:
            raise ConfigError(f"catalog has {len(self)} ranges, above the export limit {limit}")
        with Path(path).open("w") as fh:
            for lo, hi in self.ranges():
                fh.write(f"{lo}\t{hi}\n")

    @classmethod
    def from_file(cls, path, cfg: SAXConfig, capacity: int) -> MBRCatalog:
        cat = cls(cfg, capacity)
        ranges = []
        with Path(path).open() as fh:
            for line in fh:
                if line.strip():
                    lo, hi = line.split()
                    ranges.append((lo, hi))
        expected = cat.unrank(0)
        for lo, hi in ranges:
            cfg.check_word(lo)
            cfg.check_word(hi)
            if lo != expected or hi < lo or cat.rank(hi) - cat.rank(lo) + 1 > capacity:
                raise ConfigError(f"catalog file {path} is not a valid partition at {lo}..{hi}")
            if cat.rank(hi) + 1 < cat.universe:
                expected = cat.unrank(cat.rank(hi) + 1)
        if not ranges or cat.rank(ranges[-1][1]) != cat.universe - 1:
            raise ConfigError(f"catalog file {path} does not cover the word universe")
        cat._explicit = ranges
        cat._explicit_los = [lo for lo, _ in ranges]
        return cat


class MBR:
    """A bucket of distinct words from one catalog range, with per-word postings."""

    __slots__ = ("lo", "hi", "members", "postings", "envelope", "ts", "capacity")

    def __init__(self, lo: str, hi: str, capacity: int):
        self.lo = lo
        self.hi = hi
        self.capacity = capacity
        self.members: list[str] = []
        self.postings: dict[str, list[int]] = {}
        self.envelope: SymbolEnvelope | None = None
        self.ts = 0

    def __len__(self):
        return len(self.members)

    def __repr__(self):
        return f"MBR({self.lo}..{self.hi}, n={len(self.members)}, ts={self.ts})"

    def covers(self, word: str) -> bool:
        return self.lo <= word <= self.hi

    def add(self, word: str, window_id: int) -> bool:
        """Record an occurrence of ``word``.

        Returns True if the word is new to this MBR (inserted at its sorted
        position), False if it was already a member and only its postings grew.
        """
        if not self.covers(word):
            raise RangeViolation(f"{word!r} outside MBR range {self.lo}..{self.hi}")
        posting = self.postings.get(word)
        if posting is not None:
            posting.append(window_id)
            return False
        self.members.insert(bisect_left(self.members, word), word)
        assert len(self.members) <= self.capacity, "MBR over capacity"
        self.postings[word] = [window_id]
        if self.envelope is None:
            self.envelope = SymbolEnvelope.of_word(word)
        else:
            self.envelope.widen(word_codes(word))
        return True

    def window_ids(self) -> list[int]:
        return [wid for word in self.members for wid in self.postings[word]]


class Node:
    __slots__ = ("elements", "keys", "children", "envelope")

    def __init__(self, elements: list[MBR] | None = None, children: list[Node] | None = None):
        self.elements = elements if elements is not None else []
        self.keys = [e.lo for e in self.elements]
        self.children = children if children is not None else []
        self.envelope: SymbolEnvelope | None = None
        self.refresh_envelope()

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def refresh_envelope(self) -> None:
        env = None
        for part in [e.envelope for e in self.elements] + [c.envelope for c in self.children]:
            if part is None:
                continue
            if env is None:
                env = part.copy()
            else:
                env.union(part)
        self.envelope = env

    def widen(self, part: SymbolEnvelope) -> None:
        if self.envelope is None:
            self.envelope = part.copy()
        else:
            self.envelope.union(part)


class VisitClock:
    """Logical clock advanced once per query."""

    __slots__ = ("counter",)

    def __init__(self, counter: int = 0):
        self.counter = counter

    def tick(self) -> int:
        self.counter += 1
        return self.counter

    def reset(self) -> None:
        self.counter = 0

    def __repr__(self):
        return f"VisitClock({self.counter})"


class BSTree:
    """B-tree of order ``order`` (max children per node) over MBRs keyed by range low bound.

    Words are inserted with :meth:`insert`; a word lands in the MBR whose range
    covers it, and a missing MBR is created from the catalog and placed with the
    usual split-at-median B-tree insertion (:meth:`insert_mbr`).
    """

    def __init__(
        self,
        cfg: SAXConfig,
        order: int = 32,
        mbr_capacity: int = 64,
        catalog: MBRCatalog | None = None,
    ):
        if order < 3:
            raise ConfigError(f"B-tree order must be at least 3, got {order}")
        self.cfg = cfg
        self.order = order
        self.mbr_capacity = mbr_capacity
        self.catalog = catalog if catalog is not None else MBRCatalog(cfg, mbr_capacity)
        if self.catalog.capacity != mbr_capacity:
            raise ConfigError("catalog capacity differs from tree MBR capacity")
        self.root = Node()
        self.height = 0
        self.clock = VisitClock()
        self._size = 0

    def empty_like(self) -> BSTree:
        return BSTree(self.cfg, self.order, self.mbr_capacity, self.catalog)

    def __len__(self) -> int:
        """Number of MBRs in the tree."""
        return self._size

    # -- search ---------------------------------------------------------------

    def find(self, word: str) -> MBR | None:
        node = self.root
        while True:
            i = bisect_right(node.keys, word)
            if i and word <= node.elements[i - 1].hi:
                return node.elements[i - 1]
            if node.is_leaf:
                return None
            node = node.children[i]

    # -- insertion ------------------------------------------------------------

    def insert(self, word: str, window_id: int) -> int:
        """Add one feature; returns the tree height afterwards."""
        self.cfg.check_word(word)
        if self.height and self._add_to_existing(self.root, word, word_codes(word), window_id):
            return self.height
        lo, hi = self.catalog.lookup(word)
        mbr = MBR(lo, hi, self.mbr_capacity)
        mbr.add(word, window_id)
        return self.insert_mbr(mbr)

    def _add_to_existing(self, node: Node, word: str, codes, window_id: int) -> bool:
        i = bisect_right(node.keys, word)
        if i and word <= node.elements[i - 1].hi:
            node.elements[i - 1].add(word, window_id)
        elif node.is_leaf or not self._add_to_existing(node.children[i], word, codes, window_id):
            return False
        node.envelope.widen(codes)
        return True

    def insert_mbr(self, mbr: MBR) -> int:
        """Standard B-tree insertion keyed by ``mbr.lo``; returns the new height."""
        if mbr.envelope is None:
            raise ValueError("cannot index an empty MBR")
        if self.height == 0:
            self.root = Node([mbr])
            self.height = 1
        else:
            split = self._insert(self.root, mbr)
            if split is not None:
                median, right = split
                self.root = Node([median], [self.root, right])
                self.height += 1
        self._size += 1
        return self.height

    def _insert(self, node: Node, mbr: MBR):
        i = bisect_left(node.keys, mbr.lo)
        if i < len(node.keys) and node.keys[i] == mbr.lo:
            raise DuplicateRangeError(f"range {mbr.lo}..{mbr.hi} already indexed")
        if node.is_leaf:
            node.elements.insert(i, mbr)
            node.keys.insert(i, mbr.lo)
        else:
            split = self._insert(node.children[i], mbr)
            if split is not None:
                median, right = split
                node.elements.insert(i, median)
                node.keys.insert(i, median.lo)
                node.children.insert(i + 1, right)
        node.widen(mbr.envelope)
        if len(node.elements) >= self.order:
            return self._split(node)
        return None

    def _split(self, node: Node):
        mid = len(node.elements) // 2
        median = node.elements[mid]
        # promoted element inherits the freshest timestamp of the overflowing node
        median.ts = max(e.ts for e in node.elements)
        right = Node(node.elements[mid + 1 :], node.children[mid + 1 :])
        node.elements = node.elements[:mid]
        node.keys = node.keys[:mid]
        node.children = node.children[: mid + 1]
        node.refresh_envelope()
        return median, right

    # -- traversal ------------------------------------------------------------

    def iter_nodes(self) -> Iterator[tuple[Node, int]]:
        """Nodes in preorder with their depth (root at depth 0)."""
        if self.height == 0:
            return
        stack = [(self.root, 0)]
        while stack:
            node, depth = stack.pop()
            yield node, depth
            stack.extend((c, depth + 1) for c in reversed(node.children))

    def preorder(self) -> Iterator[MBR]:
        """Elements in depth-first order: a node's elements left to right, then its
        subtrees left to right."""
        for node, _ in self.iter_nodes():
            yield from node.elements

    def __iter__(self) -> Iterator[MBR]:
        """Elements in key order."""
        def walk(node):
            for i, e in enumerate(node.elements):
                if node.children:
                    yield from walk(node.children[i])
                yield e
            if node.children:
                yield from walk(node.children[-1])

        if self.height:
            yield from walk(self.root)

    def postings(self) -> dict[str, list[int]]:
        return {w: list(p) for mbr in self for w, p in mbr.postings.items()}

    def word_count(self) -> int:
        return sum(len(mbr) for mbr in self.preorder())

    def compute_height(self) -> int:
        if self.height == 0:
            return 0
        h, node = 1, self.root
        while node.children:
            node = node.children[0]
            h += 1
        return h

    def reset_timestamps(self) -> None:
        for mbr in self.preorder():
            mbr.ts = 0
        self.clock.reset()

    # -- diagnostics ----------------------------------------------------------

    def dump(self) -> str:
        """Preorder rendering, one node per line, indented two spaces per level."""
        lines = []
        for node, depth in self.iter_nodes():
            body = " ".join(f"[{e.lo}..{e.hi} n={len(e)} ts={e.ts}]" for e in node.elements)
            lines.append("  " * depth + body)
        return "\n".join(lines) + ("\n" if lines else "")

    def check_invariants(self) -> None:
        """Raise AssertionError if any structural invariant is broken."""
        m = self.order
        min_children = -(-m // 2)
        if self.height == 0:
            assert not self.root.elements and not self.root.children and self._size == 0
            return
        leaf_depths = set()
        count = 0
        prev_hi = None
        for mbr in self:
            assert mbr.lo <= mbr.hi
            if prev_hi is not None:
                assert prev_hi < mbr.lo, f"ranges out of order at {mbr!r}"
            prev_hi = mbr.hi
            assert mbr.members, f"empty MBR {mbr!r}"
            assert len(mbr.members) <= self.mbr_capacity
            assert all(a < b for a, b in zip(mbr.members, mbr.members[1:])), "members unsorted"
            assert all(mbr.covers(w) for w in mbr.members)
            assert set(mbr.postings) == set(mbr.members)
            assert SymbolEnvelope.of_words(mbr.members) == mbr.envelope
            assert self.catalog.lookup(mbr.lo) == (mbr.lo, mbr.hi)
            count += 1
        assert count == self._size, f"size {self._size} but {count} elements reachable"

        def check(node: Node, depth: int, is_root: bool):
            n = len(node.elements)
            assert node.keys == [e.lo for e in node.elements]
            assert n <= m - 1, f"node overflow ({n} elements, order {m})"
            if node.children:
                assert len(node.children) == n + 1
                if is_root:
                    assert len(node.children) >= 2
                else:
                    assert min_children <= len(node.children) <= m
                for i, e in enumerate(node.elements):
                    assert node.children[i].elements[-1].hi < e.lo
                    assert e.hi < node.children[i + 1].elements[0].lo
                for c in node.children:
                    check(c, depth + 1, False)
            else:
                leaf_depths.add(depth)
                if not is_root:
                    assert n >= min_children - 1, f"leaf underflow ({n} elements)"
                assert n >= 1
            expected = Node.__new__(Node)
            expected.elements, expected.children = node.elements, node.children
            Node.refresh_envelope(expected)
            assert expected.envelope == node.envelope, "stale node envelope"

        check(self.root, 0, True)
        assert len(leaf_depths) == 1, f"leaves at depths {sorted(leaf_depths)}"
        assert self.height == leaf_depths.pop() + 1 == self.compute_height()
