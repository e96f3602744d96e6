import numpy as np
import pytest

from conftest import random_instance
from xbench import checks
from xbench.dataset import Dataset
from xbench.selection import ReferenceSet, run_selection
from xbench.targets import (
    TargetBundle,
    closest_targets_for_face,
    cross_benchmark,
    deviation_report,
)


@pytest.fixture(scope="module", params=range(5))
def result(request):
    d, _ = random_instance(request.param)
    return cross_benchmark(d)


def test_members_are_fixed_points(result):
    assert checks.member_fixed_point(result.dataset, result.selection.sets, result.bundles) == []


def test_targets_on_face(result):
    assert checks.targets_on_face(result.dataset, result.selection.sets, result.bundles) == []


def test_joint_equals_per_dmu(result):
    d = result.dataset
    for rs, face in zip(result.selection.sets, result.bundles):
        joint = closest_targets_for_face(d, rs, joint=True)
        np.testing.assert_allclose([b.distance for b in joint], [b.distance for b in face],
                                   atol=1e-9)


def test_best_face_not_worse_than_selection(result):
    st = result.selection
    best = np.min([[b.distance for b in face] for face in result.bundles], axis=0)
    assert np.all(best <= st.delta + 1e-6)


def test_result_is_complete(result):
    assert not result.partial
    assert result.deviations.values.shape == (result.dataset.n, result.selection.a,
                                              result.dataset.m + result.dataset.s)


def test_tiny_targets(tiny):
    res = cross_benchmark(tiny)
    d_best = np.min([[b.distance for b in face] for face in res.bundles], axis=0)
    assert d_best.sum() == pytest.approx(5 / 6, abs=1e-6)
    assert res.bundle("B", 1).distance == pytest.approx(0.0, abs=1e-9)


def _bundle(x, y):
    return TargetBundle(0, 1, tuple(x), tuple(y), (0,), (1.0,), 0.0)


def test_deviation_signs_airline_rows(table2_rows):
    d = table2_rows
    nippon = _bundle((21026.7, 588.9, 1250.8, 4207.8), (35261, 614))
    dv = deviation_report(Dataset.from_arrays(d.X[:1], d.Y[:1], ids=["NIPPON"],
                                              input_names=d.input_names,
                                              output_names=d.output_names), [[nippon]])
    assert dv.rounded()[0, 0].tolist() == [-72, 32, 38, 31, 0, 0]
    # TWA's cargo target from the same table, 3321 against 1119
    twa = Dataset.from_arrays(d.X[1:2], d.Y[1:2])
    dv = deviation_report(twa, [[_bundle(d.X[1], (62345, 3321))]])
    assert dv.rounded()[0, 0, -1] == 197


def test_deviation_csv(tiny):
    res = cross_benchmark(tiny)
    lines = res.deviations.to_csv().splitlines()
    assert lines[0] == "dmu,face,factor,deviation"
    assert len(lines) == 1 + tiny.n * res.selection.a * 3
    assert lines[1].startswith("A,R1,x1,")


def test_one_dmu_dataset():
    d = Dataset.from_arrays([[2.0]], [[3.0]])
    res = cross_benchmark(d)
    assert res.D == pytest.approx((0.0,), abs=1e-9)
    assert res.bundle(0, 1).distance == pytest.approx(0.0, abs=1e-9)
    np.testing.assert_allclose(res.deviations.values, 0.0, atol=1e-9)


def test_projection_onto_given_face(tiny):
    rs = ReferenceSet(1, (0, 1), run_selection(tiny).sets[0].certificate)
    face = closest_targets_for_face(tiny, rs)
    # D(3,3;1) reaches e.g. 1.5*B = (3,3;1.5); the target point itself is not unique
    assert face[3].distance == pytest.approx(0.5, abs=1e-9)
