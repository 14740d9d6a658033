import random
import warnings

import pytest

from bstree.pruning import NoProgressWarning, PruneReport, build_index, lrv_decisions, lrv_prune, touch
from bstree.sax import SAXConfig
from bstree.tree import MBR, BSTree, VisitClock


def dfs_sequence(node):
    """Preorder walk written independently of BSTree.preorder."""
    out = list(node.elements)
    for child in node.children:
        out.extend(dfs_sequence(child))
    return out


def simulate_kept(ts, threshold):
    """Flat-sequence oracle: indices that survive the keep / bridge / prune rules."""
    kept = set()
    successors = ts[1:] + [float("-inf")]
    for i, (cur, nxt) in enumerate(zip(ts, successors)):
        fresh = cur >= threshold
        bridge = (not fresh) and cur < nxt
        if fresh or bridge:
            kept.add(i)
    return kept


def random_tree(rng, n_words, order=4, cap=2):
    cfg = SAXConfig(w=4, l=4, alpha=4)
    tree = BSTree(cfg, order=order, mbr_capacity=cap)
    for wid in range(n_words):
        tree.insert("".join(rng.choice("abcd") for _ in range(4)), wid)
    return tree


def test_touch():
    mbr, sibling = MBR("aa", "ab", 2), MBR("ba", "bb", 2)
    clock = VisitClock(5)
    touch(mbr, clock)
    assert mbr.ts == 5
    clock.counter = 9
    touch(mbr, clock)
    assert mbr.ts == 9
    assert sibling.ts == 0


def test_decision_rules_hand_example():
    assert lrv_decisions([7, 2, 4, 9, 1], 5) == ["keep", "bridge", "bridge", "keep", "prune"]
    assert simulate_kept([7, 2, 4, 9, 1], 5) == {0, 1, 2, 3}


def leaf_tree_with_ts(ts_values):
    cfg = SAXConfig(w=2, l=2, alpha=3)
    tree = BSTree(cfg, order=len(ts_values) + 1, mbr_capacity=1)
    words = ["aa", "ab", "ac", "ba", "bb", "bc", "ca", "cb", "cc"][: len(ts_values)]
    for i, w in enumerate(words):
        tree.insert(w, i)
    for mbr, ts in zip(tree.preorder(), ts_values):
        mbr.ts = ts
    return tree, words


def test_prune_five_element_sequence():
    tree, words = leaf_tree_with_ts([7, 2, 4, 9, 1])
    tree.clock.counter = 9
    new, report = lrv_prune(tree, 5)
    assert set(new.postings()) == set(words[:4])
    assert (report.visited, report.kept, report.pruned, report.bridges) == (5, 4, 1, 2)
    assert all(m.ts == 0 for m in new.preorder())
    assert new.clock.counter == 0
    new.check_invariants()


def test_prune_nothing_stale_keeps_everything():
    rng = random.Random(1)
    tree = random_tree(rng, 200)
    before = tree.postings()
    for mbr in tree.preorder():
        mbr.ts = rng.randint(3, 10)
    new, report = lrv_prune(tree, 3)
    assert new.postings() == before
    assert report.pruned == 0
    assert all(m.ts == 0 for m in new.preorder())
    new.check_invariants()


def test_prune_everything_stale_empties_tree():
    tree = random_tree(random.Random(2), 200)
    new, report = lrv_prune(tree, 1)
    assert new.height == 0 and len(new) == 0
    assert report.kept == 0 and report.pruned == report.visited
    new.check_invariants()


def test_prune_empty_tree():
    tree = BSTree(SAXConfig(w=2, l=2, alpha=2), order=3, mbr_capacity=1)
    new, report = lrv_prune(tree, 1)
    assert new.height == 0 and report.visited == 0


@pytest.mark.parametrize("seed", range(40))
def test_prune_matches_flat_simulator(seed):
    rng = random.Random(seed)
    tree = random_tree(rng, rng.randint(1, 120), order=rng.choice([3, 4, 5, 7]))
    seq = dfs_sequence(tree.root)
    ts = [rng.randint(0, 20) for _ in seq]
    for mbr, t in zip(seq, ts):
        mbr.ts = t
    threshold = rng.randint(0, 21)
    expected = {id(seq[i]) for i in simulate_kept(ts, threshold)}
    fresh_words = {w for mbr, t in zip(seq, ts) if t >= threshold for w in mbr.members}
    snapshot = {w: list(p) for mbr in seq for w, p in mbr.postings.items()}
    new, report = lrv_prune(tree, threshold)
    assert {id(m) for m in new.preorder()} == expected
    assert report.kept == len(expected) and report.kept + report.pruned == report.visited
    post = new.postings()
    for w in fresh_words:
        assert post[w] == snapshot[w]
    new.check_invariants()


def test_age_mode_threshold():
    tree, words = leaf_tree_with_ts([10, 8, 3])
    tree.clock.counter = 10
    # fresh when clock - ts <= 2, i.e. ts >= 8; the last element cannot bridge
    new, _ = lrv_prune(tree, 2, mode="age")
    assert set(new.postings()) == {"aa", "ab"}
    tree, _ = leaf_tree_with_ts([10, 8, 3])
    new, _ = lrv_prune(tree, 2, mode="absolute")
    assert set(new.postings()) == {"aa", "ab", "ac"}


def test_report_csv_row():
    report = PruneReport(clock=4, visited=10, kept=6, pruned=4, bridges=1, old_height=3, new_height=2)
    assert PruneReport.csv_header() == "clock,visited,kept,pruned,bridges,old_height,new_height"
    assert report.csv_row() == "4,10,6,4,1,3,2"


def features(words):
    return [(w, i) for i, w in enumerate(words)]


def test_build_index_all_stale_prunes_empty_repeatedly():
    cfg = SAXConfig(w=2, l=2, alpha=3)
    words = ["aa", "ab", "ac", "ba", "bb", "bc", "ca"]  # 2m + 1 for m = 3
    reports = []
    tree = build_index(
        BSTree(cfg, order=3, mbr_capacity=1),
        features(words),
        htree=1,
        tmpth=1,
        on_prune=lambda t, r: reports.append(r),
    )
    # 3rd and 6th insert split the root; each prune removes everything
    assert [r.visited for r in reports] == [3, 3]
    assert all(r.kept == 0 for r in reports)
    assert tree.postings() == {"ca": [6]}


def test_build_index_empty_source():
    tree = BSTree(SAXConfig(w=2, l=2, alpha=3), order=3, mbr_capacity=1)
    assert build_index(tree, [], htree=1, tmpth=1) is tree
    assert tree.height == 0


def test_build_index_never_prunes_under_limit():
    rng = random.Random(5)
    words = ["".join(rng.choice("abcd") for _ in range(4)) for _ in range(300)]
    cfg = SAXConfig(w=4, l=4, alpha=4)
    plain = BSTree(cfg, order=5, mbr_capacity=2)
    for w, i in features(words):
        plain.insert(w, i)
    built = build_index(BSTree(cfg, order=5, mbr_capacity=2), features(words), htree=plain.height, tmpth=1)
    assert built.postings() == plain.postings()
    assert built.dump() == plain.dump()


def test_build_index_no_progress_escape_hatch():
    cfg = SAXConfig(w=2, l=2, alpha=3)
    words = ["aa", "ab", "ac", "ba"]
    with pytest.warns(NoProgressWarning):
        tree = build_index(BSTree(cfg, order=3, mbr_capacity=1), features(words), htree=1, tmpth=0)
    assert tree.word_count() == 4
    assert tree.height == 2


def test_build_index_rejects_bad_parameters():
    tree = BSTree(SAXConfig(w=2, l=2, alpha=3), order=3, mbr_capacity=1)
    with pytest.raises(ValueError):
        build_index(tree, [], htree=0, tmpth=1)
    with pytest.raises(ValueError):
        build_index(tree, [], htree=2, tmpth=-1)


def test_build_index_height_bound_at_loop_boundaries():
    cfg = SAXConfig(w=4, l=4, alpha=4)
    rng = random.Random(9)
    words = ["".join(rng.choice("abcd") for _ in range(4)) for _ in range(3000)]
    heights, after_prune = [], []
    with warnings.catch_warnings():
        warnings.simplefilter("error", NoProgressWarning)
        build_index(
            BSTree(cfg, order=3, mbr_capacity=1),
            features(words),
            htree=3,
            tmpth=1,
            on_insert=lambda t: heights.append(t.height),
            on_prune=lambda t, r: after_prune.append(t.height),
        )
    assert after_prune
    assert max(heights) <= 4
    assert max(after_prune) <= 3
