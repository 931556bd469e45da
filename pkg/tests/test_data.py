import io

import numpy as np
import pytest

from specmesh import (
    LabeledSignals,
    generate_bump_dataset,
    load_signals_csv,
    ring_distances,
    split_grouped,
)
from specmesh.data import BUMP_HEIGHT, save_signals_csv
from specmesh.errors import UserError


@pytest.fixture(scope="module")
def bumps(icosphere2):
    return generate_bump_dataset(
        icosphere2, n_per_class=30, noise_sigma=0.1, bump_width=2.0, seed=0
    )


def test_labeled_signals_alignment():
    with pytest.raises(UserError, match="align"):
        LabeledSignals(np.zeros((3, 5)), np.zeros(2, dtype=int), np.zeros(3, dtype=int))


def test_dataset_shapes_and_balance(bumps, icosphere2):
    assert bumps.signals.shape == (60, icosphere2.n_vertices)
    assert np.sum(bumps.labels == 0) == 30
    assert np.sum(bumps.labels == 1) == 30


def test_dataset_deterministic(icosphere2):
    a = generate_bump_dataset(icosphere2, 10, 0.1, 2.0, seed=4)
    b = generate_bump_dataset(icosphere2, 10, 0.1, 2.0, seed=4)
    assert np.array_equal(a.signals, b.signals)
    assert np.array_equal(a.group_ids, b.group_ids)
    c = generate_bump_dataset(icosphere2, 10, 0.1, 2.0, seed=5)
    assert not np.array_equal(a.signals, c.signals)


def test_dataset_groups_are_class_pure(bumps):
    for g in np.unique(bumps.group_ids):
        assert len(np.unique(bumps.labels[bumps.group_ids == g])) == 1


def test_dataset_group_sizes_capped(bumps):
    _, counts = np.unique(bumps.group_ids, return_counts=True)
    assert counts.max() <= 3
    assert counts.min() >= 1


def test_dataset_noiseless_bump_profile(icosphere2):
    # with zero noise, each signal is exactly a hop-distance Gaussian bump
    data = generate_bump_dataset(icosphere2, 5, 0.0, 2.0, seed=1)
    for row, label in zip(data.signals, data.labels):
        center = int(np.argmax(row))
        assert row[center] == pytest.approx(BUMP_HEIGHT, rel=1e-12)
        dist = ring_distances(icosphere2, center).astype(float)
        expected = BUMP_HEIGHT * np.exp(-(dist**2) / (2.0 * 2.0**2))
        assert np.abs(row - expected).max() < 1e-12


def test_dataset_classes_far_apart(icosphere2):
    # class-1 centers sit near the vertex farthest from vertex 0
    data = generate_bump_dataset(icosphere2, 5, 0.0, 2.0, seed=2)
    d0 = ring_distances(icosphere2, 0)
    for row, label in zip(data.signals, data.labels):
        center = int(np.argmax(row))
        if label == 0:
            assert d0[center] <= 1
        else:
            assert d0[center] >= d0.max() - 1


def test_dataset_rejects_overlapping_bumps(single_triangle):
    with pytest.raises(UserError, match="width"):
        generate_bump_dataset(single_triangle, 3, 0.1, 5.0, seed=0)


def test_dataset_rejects_bad_parameters(icosphere2):
    with pytest.raises(UserError):
        generate_bump_dataset(icosphere2, 0, 0.1, 2.0, seed=0)
    with pytest.raises(UserError):
        generate_bump_dataset(icosphere2, 3, -0.1, 2.0, seed=0)


def test_split_fractions_and_group_disjointness(bumps):
    tr, va, te = split_grouped(bumps, (0.6, 0.2, 0.2), seed=0)
    assert len(tr) + len(va) + len(te) == len(bumps)
    sets = [set(part.group_ids.tolist()) for part in (tr, va, te)]
    assert not (sets[0] & sets[1]) and not (sets[0] & sets[2]) and not (sets[1] & sets[2])
    # group-level fractions are honored per class to within one group
    for cls in (0, 1):
        totals = [
            len(np.unique(p.group_ids[p.labels == cls])) for p in (tr, va, te)
        ]
        n_groups = sum(totals)
        for frac, got in zip((0.6, 0.2, 0.2), totals):
            assert abs(got - frac * n_groups) <= 1.0


def test_split_every_part_has_both_classes(bumps):
    for part in split_grouped(bumps, (0.6, 0.2, 0.2), seed=3):
        assert set(np.unique(part.labels)) == {0, 1}


def test_split_deterministic(bumps):
    a = split_grouped(bumps, (0.5, 0.5), seed=7)
    b = split_grouped(bumps, (0.5, 0.5), seed=7)
    for pa, pb in zip(a, b):
        assert np.array_equal(pa.signals, pb.signals)


def test_split_validates_fractions(bumps):
    with pytest.raises(UserError, match="sum"):
        split_grouped(bumps, (0.5, 0.4), seed=0)


def test_split_requires_enough_groups(icosphere2):
    data = LabeledSignals(
        np.zeros((2, icosphere2.n_vertices)), np.array([0, 1]), np.array([0, 1])
    )
    with pytest.raises(UserError, match="groups"):
        split_grouped(data, (0.5, 0.3, 0.2), seed=0)


def test_csv_roundtrip(bumps, icosphere2):
    buf = io.StringIO()
    save_signals_csv(bumps, buf)
    buf.seek(0)
    back = load_signals_csv(buf, icosphere2)
    assert np.array_equal(back.signals, bumps.signals)
    assert np.array_equal(back.labels, bumps.labels)
    assert np.array_equal(back.group_ids, bumps.group_ids)


def test_csv_rejects_wrong_width(icosphere2):
    with pytest.raises(UserError, match="row 1"):
        load_signals_csv(io.StringIO("0,1,0.5\n"), icosphere2)


def test_csv_rejects_nan(icosphere2):
    n = icosphere2.n_vertices
    row = "0,1," + ",".join(["nan"] + ["0"] * (n - 1))
    with pytest.raises(UserError, match="NaN"):
        load_signals_csv(io.StringIO(row + "\n"), icosphere2)


def test_csv_rejects_garbage(icosphere2):
    n = icosphere2.n_vertices
    row = "0,x," + ",".join(["0"] * n)
    with pytest.raises(UserError, match="unparseable"):
        load_signals_csv(io.StringIO(row + "\n"), icosphere2)


def test_csv_rejects_empty(icosphere2):
    with pytest.raises(UserError, match="no data"):
        load_signals_csv(io.StringIO(""), icosphere2)
