"""Dataset construction and on-disk format."""

import numpy as np
import pytest

from goldmine.data import (GALTON_THETA1, GALTON_THETA_GRID, Dataset,
                           make_galton_dataset, make_galton_reference_dataset,
                           make_lotka_dataset)
from goldmine.exceptions import DataError, DigestMismatch, MissingAugmentation
from goldmine.simulators import REFERENCE_LOG_RATES


def test_galton_pairing_structure(galton_ds):
    ds = galton_ds
    assert np.array_equal(ds.y, np.arange(ds.n) % 2)
    # consecutive rows share theta0; even rows generated there, odd rows at theta1
    assert np.array_equal(ds.theta0[0::2], ds.theta0[1::2])
    assert np.array_equal(ds.theta_gen[ds.y == 0], ds.theta0[ds.y == 0])
    assert np.all(ds.theta_gen[ds.y == 1] == GALTON_THETA1)
    assert np.all(ds.theta1 == GALTON_THETA1)
    grid_hits = np.unique(ds.theta0[:, 0])
    assert np.allclose(grid_hits, GALTON_THETA_GRID)


def test_galton_reference_dataset(galton_ref_ds):
    ds = galton_ref_ds
    assert np.all(ds.theta0 == -0.7) and np.all(ds.theta_gen == -0.7)
    assert np.array_equal(ds.log_joint_ratio, np.zeros(ds.n))
    assert ds.simulator == "galton"


def test_lotka_dataset_box_and_reference(lotka_ds):
    ds = lotka_ds
    ref = np.asarray(REFERENCE_LOG_RATES)
    assert np.all(np.abs(ds.theta0 - ref) <= 0.01 + 1e-12)
    assert np.all(ds.theta1 == ref)
    assert np.array_equal(ds.theta_gen, ds.theta0)
    assert ds.x.shape == (ds.n, 9)
    assert np.all(np.isfinite(ds.x))
    assert ds.n_invalid >= 0


def test_builders_are_deterministic(tmp_path, lotka_ds):
    a = make_galton_dataset(50, 99)
    b = make_galton_dataset(50, 99)
    pa, pb = tmp_path / "a.ndjson", tmp_path / "b.ndjson"
    a.save(pa)
    b.save(pb)
    assert pa.read_bytes() == pb.read_bytes()
    again = make_lotka_dataset(lotka_ds.n, lotka_ds.base_seed)
    assert again.records_digest() == lotka_ds.records_digest()


@pytest.mark.parametrize("maker", [
    lambda: make_galton_dataset(60, 7),
    lambda: make_galton_reference_dataset(60, -0.8, 7),
    lambda: make_lotka_dataset(12, 7),
])
def test_save_load_round_trip_is_exact(tmp_path, maker):
    ds = maker()
    path = tmp_path / "ds.ndjson"
    ds.save(path)
    back = Dataset.load(path)
    assert np.array_equal(back.x, ds.x)
    assert np.array_equal(back.y, ds.y)
    assert np.array_equal(back.theta0, ds.theta0)
    assert np.array_equal(back.theta1, ds.theta1)
    assert np.array_equal(back.theta_gen, ds.theta_gen)
    assert np.array_equal(back.log_joint_ratio, ds.log_joint_ratio)
    assert np.array_equal(back.joint_score, ds.joint_score)
    assert back.n_invalid == ds.n_invalid
    assert back.records_digest() == ds.records_digest()
    # saving the loaded copy reproduces the file byte for byte
    path2 = tmp_path / "ds2.ndjson"
    back.save(path2)
    assert path2.read_bytes() == path.read_bytes()


def test_empty_dataset_round_trip(tmp_path):
    ds = make_galton_dataset(0, 5)
    path = tmp_path / "empty.ndjson"
    ds.save(path)
    back = Dataset.load(path)
    assert back.n == 0
    assert path.read_text().count("\n") == 1


def test_truncated_file_is_rejected(tmp_path):
    path = tmp_path / "ds.ndjson"
    make_galton_dataset(20, 3).save(path)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-4]) + "\n")
    with pytest.raises(DigestMismatch):
        Dataset.load(path)


def test_tampered_record_is_rejected(tmp_path):
    path = tmp_path / "ds.ndjson"
    make_galton_dataset(20, 3).save(path)
    text = path.read_text().replace('"y":1', '"y":0', 1)
    path.write_text(text)
    with pytest.raises(DigestMismatch):
        Dataset.load(path)


def test_foreign_file_is_rejected(tmp_path):
    path = tmp_path / "junk.ndjson"
    path.write_text('{"format":"something-else"}\n')
    with pytest.raises(DataError):
        Dataset.load(path)
    path.write_text("")
    with pytest.raises(DataError):
        Dataset.load(path)
    path.write_text("not json at all\n")
    with pytest.raises(DataError):
        Dataset.load(path)


def test_require_scores(galton_ds):
    assert galton_ds.require_scores() is galton_ds.joint_score
    import dataclasses
    bare = dataclasses.replace(galton_ds, joint_score=None)
    with pytest.raises(MissingAugmentation):
        bare.require_scores()


def test_subset_slices_all_columns(galton_ds):
    idx = np.array([3, 1, 7])
    sub = galton_ds.subset(idx)
    assert sub.n == 3
    assert np.array_equal(sub.x, galton_ds.x[idx])
    assert np.array_equal(sub.joint_score, galton_ds.joint_score[idx])
    assert sub.simulator == galton_ds.simulator


def test_mismatched_columns_rejected(galton_ds):
    import dataclasses
    with pytest.raises(DataError):
        dataclasses.replace(galton_ds, y=galton_ds.y[:-1])
