import numpy as np
import pytest

import reidpp


def test_distances_and_eval():
    feats, ids = reidpp.generate_synthetic(n_ids=5, per_id=4, dims=8, spread=0.01, seed=3)
    q, g = feats[::4], np.delete(feats, np.s_[::4], axis=0)
    qid, gid = ids[::4], [x for i, x in enumerate(ids) if i % 4]
    d = reidpp.euclidean_distances(q, g)
    assert d.shape == (5, 15)
    r = reidpp.evaluate(d, qid, gid)
    assert r["mAP"] == 1.0
    assert r["cmc"][0] == 1.0


def test_rerank_lambda_one_is_identity():
    rng = np.random.default_rng(0)
    q = rng.normal(size=(4, 6)).astype(np.float32)
    g = rng.normal(size=(20, 6)).astype(np.float32)
    rr = reidpp.k_reciprocal_rerank(q, g, k1=8, k2=3, lambda_=1.0)
    assert np.allclose(rr, reidpp.euclidean_distances(q, g), atol=1e-7)


def test_losses_and_gradient():
    x = np.eye(4)
    assert reidpp.triplet_loss(x, [0, 0, 1, 1]) == pytest.approx(0.4, abs=1e-12)
    grad = reidpp.loss_gradient(np.random.default_rng(1).normal(size=(8, 6)), [0, 0, 1, 1, 2, 2, 3, 3])
    assert grad.shape == (8, 6)


def test_augment_determinism():
    img = np.random.default_rng(2).integers(0, 256, size=(32, 16, 3), dtype=np.uint8)
    a, ra = reidpp.random_erase(img, seed=9, probability=1.0)
    b, rb = reidpp.random_erase(img, seed=9, probability=1.0)
    assert ra == rb and np.array_equal(a, b)
    assert np.array_equal(reidpp.horizontal_flip(reidpp.horizontal_flip(img)), img)
    gray, region = reidpp.local_grayscale(img, seed=4, probability=1.0)
    x, y, w, h = region
    patch = gray[y : y + h, x : x + w]
    assert (patch[..., 0] == patch[..., 1]).all() and (patch[..., 1] == patch[..., 2]).all()


def test_schedule_and_errors():
    assert reidpp.lr_at(0) == 1e-4
    assert reidpp.lr_at(10) == 5e-3
    with pytest.raises(reidpp.ConfigError):
        reidpp.lr_at(-1)
    with pytest.raises(reidpp.ShapeError):
        reidpp.euclidean_distances(np.zeros((2, 3), np.float32), np.zeros((2, 4), np.float32))
    with pytest.raises(reidpp.ReidError):
        reidpp.triplet_loss(np.zeros((2, 2)), [0, 1])


def test_io_roundtrip(tmp_path):
    f = np.arange(12, dtype=np.float32).reshape(3, 4)
    reidpp.save_features(f, str(tmp_path / "f.fvec"))
    assert np.array_equal(reidpp.load_features(str(tmp_path / "f.fvec")), f)
    with pytest.raises(reidpp.IoError):
        reidpp.load_features(str(tmp_path / "missing.fvec"))
