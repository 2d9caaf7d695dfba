import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from smoothkmeans import engine
from smoothkmeans.engine import (
    ClusteringState,
    RepeatedClusteringError,
    assign,
    drop_decompositions,
    initial_state,
    potential,
    recenter,
    run,
    step,
)

LINE = np.array([[0.0], [1.0], [8.0], [9.0]])


def test_assign_examples():
    np.testing.assert_array_equal(assign([[0.0], [10.0]], [[1.0], [9.0]]), [0, 1])
    np.testing.assert_array_equal(assign([[5.0]], [[1.0], [9.0]]), [0])
    np.testing.assert_array_equal(assign(LINE, [[3.0]]), [0, 0, 0, 0])
    with pytest.raises(ValueError):
        assign(LINE, np.zeros((0, 1)))


def test_recenter_examples():
    ids, centers, removed = recenter([[0, 0], [2, 0]], [0, 0], [0])
    np.testing.assert_array_equal(centers, [[1.0, 0.0]])
    assert removed == []
    ids, centers, removed = recenter([[0, 0], [2, 0]], [0, 0], [0, 1])
    assert ids.tolist() == [0] and removed == [1]


def test_recenter_fixed_point():
    ids, centers, _ = recenter(LINE, [0, 0, 1, 1], [0, 1])
    ids2, centers2, _ = recenter(LINE, assign(LINE, centers), ids)
    np.testing.assert_array_equal(centers, centers2)


def test_potential_examples():
    assert potential([[0, 0], [2, 0]], [[1, 0]]) == 2.0
    assert potential(LINE, LINE) == 0.0
    assert potential(LINE, [[0.5], [8.5]]) == 1.0
    with pytest.raises(ValueError):
        potential(LINE, np.zeros((0, 1)))


def test_step_line_example():
    state = initial_state(LINE, [[1.0], [8.0]])
    new, rec = step(state, LINE)
    assert rec.reassignments.shape == (0, 3)
    np.testing.assert_array_equal(new.centers, [[0.5], [8.5]])
    assert rec.move_drop == pytest.approx(1.0, abs=1e-15)
    assert rec.assignment_drop == 0.0
    assert rec.per_point_terms.size == 0


def test_step_tie_and_removal():
    # point 1 is exactly halfway between centers 1 and 2 (dyadic values so
    # the tie survives floating point); it goes to the lower index and
    # cluster 2 ends up empty
    pts = np.array([[0.0], [1.0]])
    state = initial_state(pts, [[0.0], [0.625], [1.375]])
    assert state.assignment.tolist() == [0, 1]
    new, rec = step(state, pts)
    assert new.assignment.tolist() == [0, 1]
    assert rec.removed_clusters == [2]
    assert new.ids.tolist() == [0, 1]


def test_step_fixed_point():
    state = initial_state(LINE, [[0.5], [8.5]])
    new, rec = step(state, LINE)
    assert rec.reassignments.size == 0
    assert rec.assignment_drop == 0.0 and rec.move_drop == 0.0


def test_point_term_matches_recomputation():
    pts = np.array([[1.5, 0.0]])
    pre = ClusteringState(np.array([0]), np.array([0, 1]), np.array([[0.0, 0.0], [2.0, 0.0]]), 2.25)
    _, rec = step(pre, pts)
    assert rec.reassignments.tolist() == [[0, 0, 1]]
    assert rec.per_point_terms.tolist() == pytest.approx([2.0])
    assert rec.assignment_drop == pytest.approx(2.25 - 0.25)


def test_cluster_term_matches_recomputation():
    pts = np.array([[0.0, 0.0], [2.0, 0.0]])
    pre = ClusteringState(np.array([0, 0]), np.array([0]), np.array([[0.0, 0.0]]), 4.0)
    new, rec = step(pre, pts)
    assert rec.per_cluster_terms.tolist() == pytest.approx([2.0])
    assert rec.move_drop == pytest.approx(4.0 - 2.0)
    pp, pc = drop_decompositions(rec, pts)
    np.testing.assert_array_equal(pc, rec.per_cluster_terms)


def test_run_converges_on_line():
    tr = run(LINE, 2, init="explicit", centers=[[0.0], [9.0]])
    assert tr.termination == "converged"
    assert tr.records[-1].post_state.potential == 1.0
    assert sorted(map(tuple, [tr.records[-1].post_state.members(c) for c in (0, 1)])) == [(0, 1), (2, 3)]


def test_run_stable_seed_converges_in_one():
    tr = run(LINE, 2, init="explicit", centers=[[0.5], [8.5]])
    assert tr.termination == "converged" and len(tr.records) == 1


def test_run_k_equals_n():
    pts = np.random.default_rng(3).random((12, 2))
    tr = run(pts, 12, init="sample_points", seed=4)
    assert tr.termination == "converged"
    assert tr.records[-1].post_state.potential == 0.0


def test_run_bad_k():
    with pytest.raises(ValueError):
        run(LINE, 5)
    with pytest.raises(ValueError):
        run(LINE, 0)


def test_run_max_iterations_reported():
    pts = np.random.default_rng(0).random((300, 2))
    tr = run(pts, 12, seed=1, max_iterations=2)
    assert tr.termination == "max_iterations" and len(tr.records) == 2


def test_run_deterministic():
    pts = np.random.default_rng(5).random((80, 3))
    a, b = run(pts, 6, seed=9), run(pts, 6, seed=9)
    assert a.potentials == b.potentials
    np.testing.assert_array_equal(a.records[-1].post_state.assignment, b.records[-1].post_state.assignment)


def test_repeat_detection(monkeypatch):
    real_step = engine.step
    flip = {"n": 0}

    def cycling_step(state, points, index=1):
        new, rec = real_step(state, points, index)
        flip["n"] += 1
        a = np.array([0, 0, 1, 1]) if flip["n"] % 2 else np.array([0, 1, 1, 1])
        fake = ClusteringState(a, new.ids, new.centers, new.potential)
        rec.post_state = fake
        rec.reassignments = np.array([[1, 0, 1]])
        return fake, rec

    monkeypatch.setattr(engine, "step", cycling_step)
    with pytest.raises(RepeatedClusteringError):
        run(LINE, 2, init="explicit", centers=[[0.0], [9.0]], max_iterations=20)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 40), st.integers(1, 4), st.integers(1, 6), st.integers(0, 10**6))
def test_run_invariants(n, d, k, seed):
    k = min(k, n)
    pts = np.random.default_rng(seed).normal(size=(n, d))
    tr = run(pts, k, seed=seed)
    for rec in tr.records:
        scale = 1.0 + rec.pre_state.potential
        assert rec.post_state.potential <= rec.pre_state.potential + 1e-9 * scale
        assert rec.assignment_drop >= -1e-9 * scale and rec.move_drop >= -1e-9 * scale
        assert abs(rec.assignment_drop + rec.move_drop - rec.total_drop) <= 1e-8 * scale
        assert abs(rec.assignment_drop - rec.per_point_terms.sum()) <= 1e-8 * scale
        assert abs(rec.move_drop - rec.per_cluster_terms.sum()) <= 1e-8 * scale
        post = rec.post_state
        # potential recomputed from its definition
        fresh = sum(float(np.sum((pts[i] - post.center(c)) ** 2)) for i, c in enumerate(post.assignment))
        assert post.potential == pytest.approx(fresh, rel=1e-9, abs=1e-12)
        # assignment optimality against the centers used in the assignment phase
        pre = rec.pre_state
        dist = np.linalg.norm(pts[:, None, :] - pre.centers[None], axis=2)
        own = dist[np.arange(n), pre.rows(post.assignment)]
        assert np.all(own <= dist.min(axis=1) + 1e-12)
    if tr.termination == "converged" and len(tr.records) > 1:
        last = tr.records[-1]
        assert last.reassignments.size == 0
        np.testing.assert_array_equal(last.pre_state.centers, last.post_state.centers)
