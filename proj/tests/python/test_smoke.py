"""Smoke tests for the python module: anchors only, heavy lifting is in ctest."""

import math
import tempfile
from pathlib import Path

import numpy as np
import pytest

import _sdd as sdd


def test_loss_algebra():
    assert sdd.lambda_schedule(0, 70) == 1.0
    assert sdd.lambda_schedule(70, 70) == 0.0
    assert sdd.lambda_schedule(35, 70) == 0.5
    assert sdd.lambda_schedule(10, 70, False) == 0.5
    with pytest.raises(sdd.ArgumentError):
        sdd.lambda_schedule(71, 70)

    assert sdd.gamma_indicator(sdd.SupervisionTier.NEGATIVE) == 1
    assert sdd.gamma_indicator(sdd.SupervisionTier.POSITIVE_PIXEL_LABELED) == 1
    assert sdd.gamma_indicator(sdd.SupervisionTier.POSITIVE_WEAK) == 0

    assert sdd.total_loss(0.2, 0.4, 0.5, 1, 1.0) == pytest.approx(0.3, abs=1e-12)
    assert sdd.classification_loss(0.0, 0) == pytest.approx(math.log(2), abs=1e-12)


def test_mask_ops():
    mask = np.zeros((9, 9), dtype=np.uint8)
    mask[4, 4] = 1
    dil = sdd.dilate_mask(mask, 3)
    assert dil.sum() == 9

    weights = sdd.distance_weight_mask(dil, w_pos=4.0, p=1.0)
    assert weights.max() == pytest.approx(4.0)
    assert weights[0, 0] == 1.0

    strip = np.zeros((1, 7), dtype=np.uint8)
    strip[0, 2:5] = 1
    w = sdd.distance_weight_mask(strip, 1.0, 1.0)
    assert w[0].tolist() == pytest.approx([1, 1, 0.5, 1.0, 0.5, 1, 1], abs=1e-12)


def test_rle_and_ellipse():
    decoded = sdd.decode_rle([(1, 2)], 2, 2)
    assert decoded[0, 0] == 1 and decoded[1, 0] == 1 and decoded.sum() == 2

    rng = np.random.default_rng(0)
    m = (rng.random((6, 5)) < 0.4).astype(np.uint8)
    assert np.array_equal(sdd.decode_rle(sdd.encode_rle(m), 6, 5), m)

    disk = sdd.ellipse_to_mask(3, 3, 2, 2, 0.0, 7, 7)
    assert disk.sum() == 13


def test_metrics():
    assert sdd.average_precision([0.9, 0.8, 0.1], [1, 1, 0]) == 1.0
    assert sdd.average_precision([0.9, 0.8, 0.7], [1, 0, 1]) == pytest.approx((1 + 2 / 3) / 2, abs=1e-12)
    assert sdd.roc_auc([0.5, 0.5], [1, 0]) == 0.5
    tm = sdd.threshold_metrics([0.9, 0.2], [1, 0], 0.5)
    assert tm["ca"] == 1.0 and tm["fp"] == 0 and tm["fn"] == 0
    with pytest.raises(sdd.MetricError):
        sdd.average_precision([0.5], [0])


def test_model_and_synth_roundtrip():
    model = sdd.Model(channels=1, height=64, width=64, seed=3)
    assert model.descriptor_size == 66
    assert model.classification_input_channels == 1025

    img = sdd.generate_background(5, 64, 64)
    out = model.forward(img)
    assert out["seg_logits"].shape == (8, 8)
    assert 0.0 <= out["score"] <= 1.0

    defected, mask = sdd.inject_defect(
        img, {"kind": "scratch", "contrast": 0.5, "length": 16, "thickness": 1.0, "center_y": 32, "center_x": 32}
    )
    assert mask.sum() > 0
    assert defected.shape == img.shape

    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp) / "bench"
        manifest = sdd.generate_benchmark(
            root,
            {
                "height": 64,
                "width": 64,
                "train_positives": 2,
                "train_negatives": 3,
                "test_positives": 1,
                "test_negatives": 2,
                "seed": 11,
            },
        )
        assert manifest["counts"]["train"]["positives"] == 2

        history = sdd.train_model(model, "synth", root, hyperparams={"n_ep": 1, "eta": 0.01, "seed": 3})
        assert len(history) == 1
        assert math.isfinite(history[0]["total_loss"])

        report = sdd.evaluate_dataset(model, "synth", root, subset="test")
        assert len(report["rows"]) == 3
        assert 0.0 <= report["ap"] <= 1.0

        ckpt = Path(tmp) / "model.ckpt"
        model.save(ckpt)
        restored = sdd.Model.load(ckpt)
        assert restored.score(img) == pytest.approx(model.score(img), abs=0)
