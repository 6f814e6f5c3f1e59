import numpy as np
import pytest

from netimprove.errors import NotSeriesParallel
from netimprove.seriesparallel import (
    Leaf,
    Parallel,
    Series,
    check_tree,
    decompose_series_parallel,
    tree_edge_ids,
)


def test_single_edge_is_leaf():
    tree = decompose_series_parallel([("e", "s", "t")], "s", "t")
    assert tree == Leaf("e", "s", "t")


def test_two_parallel_edges():
    tree = decompose_series_parallel(
        [("e1", "s", "t"), ("e2", "s", "t")], "s", "t")
    assert isinstance(tree, Parallel)
    assert sorted(tree_edge_ids(tree)) == ["e1", "e2"]


def test_two_edge_chain_is_series():
    tree = decompose_series_parallel(
        [("e1", "s", "a"), ("e2", "a", "t")], "s", "t")
    assert isinstance(tree, Series)
    assert (tree.source, tree.sink) == ("s", "t")


def test_wheatstone_rejected(wheatstone):
    with pytest.raises(NotSeriesParallel):
        decompose_series_parallel(wheatstone)


def test_series_of_dipoles():
    edges = [("a1", "s", "m"), ("a2", "s", "m"), ("b1", "m", "t"), ("b2", "m", "t")]
    tree = decompose_series_parallel(edges, "s", "t")
    assert isinstance(tree, Series)
    check_tree(tree, edges, "s", "t")


def test_instance_entry_point(fig2):
    tree = decompose_series_parallel(fig2)
    assert isinstance(tree, Parallel)
    check_tree(tree, fig2)


def test_recomposition_on_random_graphs():
    # Build random series-parallel graphs from a random composition script,
    # decompose them, and check the tree reproduces the edge structure.
    rng = np.random.default_rng(11)
    for trial in range(60):
        edges, s, t = _random_sp_edges(rng, max_edges=10, trial=trial)
        tree = decompose_series_parallel(edges, s, t)
        check_tree(tree, edges, s, t)
        assert sorted(tree_edge_ids(tree)) == sorted(e[0] for e in edges)


def _random_sp_edges(rng, max_edges, trial):
    counter = [0]

    def fresh():
        counter[0] += 1
        return f"v{trial}_{counter[0]}"

    def build(s, t, budget):
        eid = f"g{trial}_{counter[0]}"
        counter[0] += 1
        if budget <= 1 or rng.random() < 0.3:
            return [(eid, s, t)]
        if rng.random() < 0.5:
            mid = fresh()
            left = build(s, mid, budget // 2)
            right = build(mid, t, budget - budget // 2)
        else:
            left = build(s, t, budget // 2)
            right = build(s, t, budget - budget // 2)
        return left + right

    return build("S", "T", int(rng.integers(2, max_edges + 1))), "S", "T"


def test_dead_end_not_series_parallel():
    with pytest.raises(NotSeriesParallel):
        decompose_series_parallel(
            [("e1", "s", "t"), ("e2", "s", "u")], "s", "t")
