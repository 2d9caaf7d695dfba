import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from smoothkmeans.geometry import Hyperplane, bisector, centroid, distance_to_hyperplane


def test_centroid_examples():
    np.testing.assert_array_equal(centroid([[1.0, 1.0]]), [1.0, 1.0])
    np.testing.assert_array_equal(centroid([[0, 0], [2, 0]]), [1.0, 0.0])
    np.testing.assert_array_equal(centroid([[0, 0], [1, 0], [2, 3]]), [1.0, 1.0])


def test_centroid_empty():
    with pytest.raises(ValueError, match="empty point set"):
        centroid(np.zeros((0, 2)))


@pytest.mark.parametrize(
    "a, b, normal, offset",
    [((0, 0), (2, 0), (1, 0), 1.0), ((0, 0), (0, 2), (0, 1), 1.0)],
)
def test_bisector_axis_aligned(a, b, normal, offset):
    h = bisector(a, b)
    np.testing.assert_allclose(h.normal, normal)
    assert h.offset == pytest.approx(offset)


def test_bisector_degenerate():
    with pytest.raises(ValueError, match="degenerate bisector"):
        bisector((1, 1), (1, 1))


def test_distance_examples():
    plane = Hyperplane(np.array([1.0, 0.0]), 1.0)
    assert distance_to_hyperplane((3, 5), plane) == 2.0
    assert distance_to_hyperplane((1, -4), plane) == 0.0
    assert distance_to_hyperplane((1, 7), bisector((0, 0), (2, 0))) == 0.0


def test_distance_dimension_mismatch():
    with pytest.raises(ValueError):
        distance_to_hyperplane((1, 2, 3), bisector((0, 0), (1, 0)))


def test_non_unit_normal_rejected():
    with pytest.raises(ValueError):
        Hyperplane(np.array([2.0, 0.0]), 0.0)


coords = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


@settings(max_examples=300)
@given(arrays(np.float64, 3, elements=coords), arrays(np.float64, 3, elements=coords))
def test_bisector_equidistance(a, b):
    if np.linalg.norm(a - b) < 1e-6:
        return
    h = bisector(a, b)
    half = np.linalg.norm(a - b) / 2
    assert distance_to_hyperplane(a, h) == pytest.approx(half, abs=1e-10)
    assert distance_to_hyperplane(b, h) == pytest.approx(half, abs=1e-10)


@settings(max_examples=200)
@given(arrays(np.float64, (5, 2), elements=coords), arrays(np.float64, 2, elements=coords))
def test_centroid_translation_equivariant(pts, t):
    np.testing.assert_allclose(centroid(pts + t), centroid(pts) + t, atol=1e-10)
