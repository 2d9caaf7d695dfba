import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import state, trace
from smoothkmeans.engine import run
from smoothkmeans.kernels import coarse_threshold
from smoothkmeans.harness import pipeline
from smoothkmeans.instances import generate
from smoothkmeans.verify import (
    check_bisector_inequality,
    check_coarse_drop,
    check_drop_identities,
    check_epoch_bound,
    check_monotone,
    check_potential_bound,
    check_reassignments,
    coarse_eta,
    is_coarse,
    is_coarse_bruteforce,
    verify_trace,
)


def literal_is_coarse(points, eta, c):
    """Walk every ordered triple of distinct nonempty subsets."""
    n = len(points)
    subs = [frozenset(s) for r in range(1, n + 1) for s in itertools.combinations(range(n), r)]
    mean = {s: np.mean([points[i] for i in sorted(s)], axis=0) for s in subs}
    for a, b, c3 in itertools.permutations(subs, 3):
        if len(a ^ b) <= c and len(b ^ c3) <= c:
            if np.linalg.norm(mean[a] - mean[b]) <= eta and np.linalg.norm(mean[b] - mean[c3]) <= eta:
                return False
    return True


@pytest.mark.parametrize(
    "points,eta,c,expected",
    [
        ([[0.0], [100.0]], 1.0, 1, True),
        ([[0.0], [0.5]], 1.0, 1, False),
        ([[0.0], [1.0], [2.0]], 0.0, 2, False),
        ([[0.0], [10.0], [30.0]], 1.0, 2, True),
    ],
)
def test_coarse_examples(points, eta, c, expected):
    assert is_coarse(points, eta, c) is expected
    assert is_coarse_bruteforce(points, eta, c) is expected
    assert literal_is_coarse(np.asarray(points, float), eta, c) is expected


def test_coarse_guards():
    with pytest.raises(ValueError, match="too large"):
        is_coarse(np.zeros((15, 1)), 1.0, 1)
    with pytest.raises(ValueError, match="too large"):
        is_coarse(np.zeros((3, 1)), 1.0, 4)
    with pytest.raises(ValueError, match="too large"):
        is_coarse_bruteforce(np.zeros((10, 1)), 1.0, 1)


small_sets = st.integers(1, 6).flatmap(
    lambda n: st.lists(
        st.lists(st.integers(0, 8).map(lambda v: v / 8), min_size=2, max_size=2), min_size=n, max_size=n
    )
)


@settings(max_examples=200, deadline=None)
@given(small_sets, st.integers(0, 12).map(lambda v: v / 16), st.integers(1, 3))
def test_coarse_oracles_agree(points, eta, c):
    p = np.asarray(points, dtype=float)
    assert is_coarse(p, eta, c) == is_coarse_bruteforce(p, eta, c)
    if p.shape[0] <= 3:
        assert is_coarse(p, eta, c) == literal_is_coarse(p, eta, c)


def test_coarse_eta_sits_just_below_threshold():
    rng = np.random.default_rng(5)
    for _ in range(30):
        p = rng.random((int(rng.integers(3, 8)), 2))
        thr = coarse_threshold(p, 2)
        eta = coarse_eta(p, 2)
        assert thr * (1 - 1e-8) < eta < thr
        assert is_coarse(p, eta, 2) and is_coarse_bruteforce(p, eta, 2)
        assert not is_coarse(p, thr, 2)
        assert not is_coarse_bruteforce(p, thr * (1 + 1e-9), 2)


def test_coarse_eta_zero_when_never_coarse():
    assert coarse_eta([[0.0], [1.0], [8.0], [9.0]], 2) == 0.0


def test_coarse_drop_rejects_non_coarse():
    p = np.array([[0.0, 0.0], [0.1, 0.0], [0.2, 0.0]])
    with pytest.raises(ValueError, match="not \\(eta, c\\)-coarse"):
        check_coarse_drop(p, run(p, 2, seed=0), 1.0, 2)


def _real_trace(n=120, d=2, k=8, sigma=0.1, seed=3):
    inst = generate("uniform", n, d, seed)
    return pipeline(inst, k, sigma, seed + 100, seed + 200)


def test_real_trace_passes_every_check():
    tr = _real_trace()
    reports = verify_trace(tr, "t")
    assert all(r.passed for r in reports), [r.summary_line() for r in reports if not r.passed]
    names = {r.lemma for r in reports}
    assert {"drop_identity", "bisector_actual", "bisector_lattice", "epoch_bound", "node_bound"} <= names


def test_small_trace_runs_coarse_drop():
    tr = run(np.random.default_rng(1).random((10, 2)), 3, seed=4)
    rep = [r for r in verify_trace(tr, "s") if r.lemma == "coarse_drop"][0]
    assert rep.applicable and rep.passed


def test_drop_identity_catches_corrupted_term():
    tr = _real_trace()
    assert check_drop_identities(tr).passed
    rec = next(r for r in tr.records if r.reassignments.shape[0] > 0)
    i = int(np.argmax(np.abs(rec.per_point_terms)))
    rec.per_point_terms[i] *= 1.01
    rep = check_drop_identities(tr, trace_id="bad")
    assert not rep.passed and rep.violations[0][:2] == ("bad", rec.index)


def test_move_identity_catches_corrupted_cluster_term():
    tr = _real_trace()
    rec = tr.records[0]
    j = int(np.argmax(np.abs(rec.per_cluster_terms)))
    rec.per_cluster_terms[j] *= 1.01
    assert not check_drop_identities(tr).passed


def test_monotone_negative_control():
    pts = np.zeros((2, 1))
    s0 = state([0, 1], {0: [0.0], 1: [1.0]}, 1.0)
    s1 = state([0, 1], {0: [0.0], 1: [1.0]}, 2.0)
    assert not check_monotone(trace(pts, [s0, s1])).passed
    assert check_monotone(trace(pts, [s1, s0])).passed


def test_epoch_bound_negative_control():
    # two clusters trade one point back and forth: each only sees two member sets
    pts = np.array([[0.0], [1.0], [2.0]])
    a = state([0, 0, 1], {0: [0.5], 1: [2.0]}, 3.0)
    b = state([0, 1, 1], {0: [0.0], 1: [1.5]}, 2.0)
    rep = check_epoch_bound(trace(pts, [a, b, a, b, a]))
    assert rep.checked == 1 and not rep.passed and rep.min_margin == -1
    rep = check_epoch_bound(trace(pts, [a, b, a, b]))
    assert rep.checked == 0


def test_epoch_bound_positive_example():
    pts = np.array([[0.0], [1.0], [2.0], [3.0]])
    s = [
        state([0, 0, 1, 1], {0: [0.5], 1: [2.5]}),
        state([0, 0, 1, 1], {0: [0.5], 1: [2.5]}),
        state([0, 1, 1, 1], {0: [0.0], 1: [2.0]}),
        state([0, 0, 0, 1], {0: [1.0], 1: [3.0]}),
        state([0, 0, 1, 1], {0: [0.5], 1: [2.5]}),
    ]
    rep = check_epoch_bound(trace(pts, s))
    assert rep.checked == 1 and rep.passed


def test_reassignment_log_negative_control():
    tr = _real_trace()
    assert check_reassignments(tr).passed
    rec = next(r for r in tr.records if r.reassignments.shape[0] > 0)
    rec.reassignments = rec.reassignments[1:]
    assert not check_reassignments(tr).passed


def test_cube_checks_not_applicable_out_of_cube():
    tr = _real_trace()
    tr.meta["in_cube"] = False
    for rep in (check_bisector_inequality(tr), check_potential_bound(tr)):
        assert rep.status == "not applicable" and rep.passed
        assert "NOT_APPLICABLE" in rep.summary_line()
    del tr.meta["D"]
    assert check_bisector_inequality(tr, "lattice").note == "cube_side_unknown"


def test_bisector_checks_are_exercised():
    tr = _real_trace(n=200, k=10, sigma=0.05)
    for mode in ("actual", "lattice"):
        rep = check_bisector_inequality(tr, mode)
        assert rep.applicable and rep.checked > 0 and rep.passed


def test_bisector_negative_control_with_tiny_cube():
    tr = _real_trace()
    tr.meta["in_cube"] = True
    rep = check_bisector_inequality(tr, "actual", D=1e-9)
    assert not rep.passed
