import random

import pytest

from stencilplan.kdtree import KdTree


def linear_range(points, lo, hi):
    return sorted(pid for coords, pid in points
                  if all(lo[d] <= coords[d] <= hi[d] for d in range(len(lo))))


def linear_nearest(points, q):
    best = None
    for coords, pid in points:
        d = sum((a - b) ** 2 for a, b in zip(coords, q))
        if best is None or (d, pid) < best:
            best = (d, pid)
    return best[1] if best else None


def test_simple_box():
    tree = KdTree(2, [((1, 1), 0), ((5, 5), 1)])
    assert tree.range_search((0, 0), (2, 2)) == [0]


def test_insert_then_delete_restores_set():
    pts = [((1, 2), 0), ((3, 1), 1), ((2, 2), 2)]
    tree = KdTree(2, pts)
    tree.insert((9, 9), 42)
    assert sorted(tree.range_search((0, 0), (10, 10))) == [0, 1, 2, 42]
    assert tree.delete((9, 9), 42)
    assert sorted(tree.range_search((0, 0), (10, 10))) == [0, 1, 2]
    assert tree.size == 3


def test_delete_missing_returns_false():
    tree = KdTree(2, [((1, 1), 0)])
    assert not tree.delete((2, 2), 0)
    assert tree.size == 1


def test_nearest_ties_pick_lowest_id():
    tree = KdTree(2, [((0, 1), 7), ((1, 0), 3)])
    assert tree.nearest((0, 0)) == 3


def test_nearest_on_empty_tree():
    assert KdTree(2).nearest((0, 0)) is None


def test_duplicate_coordinates_supported():
    tree = KdTree(2, [((1, 1), 1), ((1, 1), 2), ((1, 1), 3)])
    assert sorted(tree.range_search((1, 1), (1, 1))) == [1, 2, 3]
    assert tree.delete((1, 1), 2)
    assert sorted(tree.range_search((1, 1), (1, 1))) == [1, 3]


def test_best_in_box_scores_and_excludes():
    pts = [((1, 1, 5.0), 0), ((1, 2, 9.0), 1), ((4, 4, 20.0), 2)]
    tree = KdTree(3, pts)
    assert tree.best_in_box((0, 0, 0), (2, 2, 100), score_axis=2) == 1
    assert tree.best_in_box((0, 0, 0), (2, 2, 100), score_axis=2, exclude={1}) == 0
    assert tree.best_in_box((9, 9, 9), (10, 10, 10), score_axis=2) is None


def test_randomized_ops_match_linear_scan():
    rng = random.Random(7)
    tree = KdTree(2)
    points = []
    next_id = 0
    for _ in range(2000):
        op = rng.random()
        if op < 0.4 or not points:
            coords = (rng.randint(0, 30), rng.randint(0, 30))
            tree.insert(coords, next_id)
            points.append((coords, next_id))
            next_id += 1
        elif op < 0.6:
            coords, pid = points.pop(rng.randrange(len(points)))
            assert tree.delete(coords, pid)
        elif op < 0.85:
            lo = (rng.randint(0, 30), rng.randint(0, 30))
            hi = (lo[0] + rng.randint(0, 10), lo[1] + rng.randint(0, 10))
            assert sorted(tree.range_search(lo, hi)) == linear_range(points, lo, hi)
        else:
            q = (rng.randint(0, 30), rng.randint(0, 30))
            assert tree.nearest(q) == linear_nearest(points, q)
        assert tree.size == len(points)


def test_best_in_box_matches_linear_scan_3d():
    rng = random.Random(11)
    points = [((rng.randint(0, 20), rng.randint(0, 20), rng.uniform(0, 100)), pid)
              for pid in range(300)]
    tree = KdTree(3, points)
    for _ in range(200):
        lo = (rng.randint(0, 20), rng.randint(0, 20), rng.uniform(0, 50))
        hi = (lo[0] + rng.randint(0, 8), lo[1] + rng.randint(0, 8),
              lo[2] + rng.uniform(0, 50))
        inside = [(coords, pid) for coords, pid in points
                  if all(lo[d] <= coords[d] <= hi[d] for d in range(3))]
        expect = None
        if inside:
            expect = max(inside, key=lambda it: (it[0][2], -it[1]))[1]
        assert tree.best_in_box(lo, hi, score_axis=2) == expect
