import json
import math
import os
import sys

import pytest

_module_dir = os.environ.get("SIMPLERF_MODULE_DIR")
if _module_dir:
    sys.path.insert(0, _module_dir)
    import _simplerf as simplerf
else:
    simplerf = pytest.importorskip("_simplerf")

MICRO = {
    "iterations": "8",
    "rays_per_batch": "24",
    "sd_rays_per_batch": "8",
    "n_samples": "12",
    "tensorf_rank_sigma": "2",
    "tensorf_rank_color": "4",
    "tensorf_features": "8",
    "tensorf_res": "8",
    "tensorf_start_res": "8",
    "tensorf_decoder_width": "8",
    "log_every": "4",
}


def test_default_config_is_parseable_text():
    text = simplerf.default_config("hashgrid")
    assert "backend = hashgrid" in text
    assert "iterations" in text


def test_unknown_backend_raises_config_error():
    with pytest.raises(simplerf.ConfigError):
        simplerf.default_config("octree")


def test_end_to_end_pipeline(tmp_path):
    data = str(tmp_path / "scene")
    out = str(tmp_path / "run")
    renders = str(tmp_path / "renders")

    info = simplerf.generate_scene("plain-box", data, n_train=3, candidates=4,
                                   n_test=2, image_size=24, kp_density=0.25, seed=3)
    assert info["train_views"] == 3
    assert info["test_views"] == 2
    assert info["keypoints"] > 0

    trained = simplerf.train(data, out, backend="tensorf", overrides=MICRO)
    assert trained["iterations"] == 8
    assert math.isfinite(trained["final_total"])
    assert os.path.exists(trained["checkpoint"])
    assert os.path.exists(os.path.join(out, "train_log.jsonl"))

    audit = simplerf.render(data, trained["checkpoint"], renders)
    assert audit["views"] == 2
    assert audit["main_only"] is True
    assert audit["queries"] == 2 * 24 * 24 * 12
    assert all(name.startswith("main.") for name in audit["touched_params"])

    report = json.loads(simplerf.evaluate(data, trained["checkpoint"]))
    assert report["scene"] == "plain-box"
    assert report["backend"] == "tensorf"
    assert len(report["views"]) == 2

    gt = os.path.join(data, "view_0003.png")
    rendered = os.path.join(renders, "view_0003.png")
    assert os.path.exists(rendered)
    value = simplerf.psnr(gt, rendered)
    assert value > 0.0
    assert simplerf.psnr(gt, gt) == math.inf
    assert simplerf.ssim(gt, gt) == pytest.approx(1.0)


def test_gradcheck_reports_per_case():
    cases = simplerf.gradcheck("tensorf", tol=1e-4)
    assert len(cases) >= 4
    for case in cases:
        assert case["pass"], case
        assert case["max_rel_err"] < 1e-4
