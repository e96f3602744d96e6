import pytest

from xbench.dataset import Dataset
from xbench.efficiency import extreme_efficient_set
from xbench.oracle import OracleError, brute_force_selection, cone_distance, enumerate_faces


def test_one_input_one_output_has_one_face():
    d = Dataset.from_arrays([[1.0], [2.0], [3.0]], [[2.0], [3.0], [1.0]])
    E = extreme_efficient_set(d).E
    assert E == (0,)
    faces = enumerate_faces(d, E)
    assert [f.members for f in faces] == [(0,)]
    assert faces[0].maximal


def test_tiny_faces(tiny):
    faces = enumerate_faces(tiny, (0, 1, 2))
    assert [f.members for f in faces] == [(0,), (1,), (2,), (0, 1), (1, 2)]
    assert [f.members for f in faces if f.maximal] == [(0, 1), (1, 2)]
    for f in faces:
        assert f.certificate.problems(tiny, f.members) == []


def test_tiny_brute_force(tiny):
    res = brute_force_selection(tiny, enumerate_faces(tiny, (0, 1, 2)))
    assert res.D == pytest.approx((25 / 12, 5 / 6), abs=1e-9)


def test_points_not_on_common_face_excluded():
    # A and C are vertices, but the segment between them is not on the frontier
    d = Dataset.from_arrays([[1, 4], [2, 2], [4, 1]], [[1]] * 3)
    members = [f.members for f in enumerate_faces(d, (0, 1, 2))]
    assert (0, 2) not in members and (0, 1, 2) not in members


def test_cap_exceeded():
    d = Dataset.from_arrays([[1.0]] * 3, [[1.0]] * 3)
    with pytest.raises(OracleError, match="cap"):
        enumerate_faces(d, (0, 1, 2), cap=2)


def test_cone_distance_self_is_zero(tiny):
    dist, lam = cone_distance(tiny, 1, [0, 1])
    assert dist == pytest.approx(0.0, abs=1e-12)
    assert lam[1] == pytest.approx(1.0)
