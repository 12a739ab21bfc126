# Copyright 2026 The vqgan Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import math
import os
from pathlib import Path

import numpy as np
import pytest

import vqgan

DATA = os.environ.get("VQGAN_DATA_DIR", str(Path(__file__).resolve().parents[2] / "data" / "mnist5k"))


def test_subgenerator_probs_normalized():
    rng = np.random.default_rng(0)
    z = rng.uniform(0, 1, 4)
    angles = rng.uniform(0, 2 * math.pi, 2 * 4 * 3)
    p = np.asarray(vqgan.subgenerator_probs(z, angles, n_layers=2))
    assert p.shape == (8,)
    assert np.all(p >= 0)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)


def test_zero_angles_leave_only_the_cnot_ring():
    # U3(0, 0, 0) is the identity, so only the ring permutes the encoded
    # product state. The ancilla ends up as q0 xor q1.
    z = np.array([0.3, 1.1, 0.0])
    p = np.asarray(vqgan.subgenerator_probs(z, np.zeros(9), n_layers=1))
    c0, c1 = math.cos(0.3 / 2) ** 2, math.cos(1.1 / 2) ** 2
    keep = c0 * c1 + (1 - c0) * (1 - c1)
    assert p[0] == pytest.approx(c0 * c1 / keep, rel=1e-12)


def test_metrics_basics():
    p = np.array([1.0, 0.0])
    q = np.array([0.5, 0.5])
    assert vqgan.jsd(p, p) == pytest.approx(0.0, abs=1e-15)
    assert vqgan.jsd(p, q) == pytest.approx(1.5 - 0.75 * math.log2(3), abs=1e-12)
    x = np.linspace(0, 1, 64)
    assert vqgan.ssim(x, x) == pytest.approx(1.0)
    assert vqgan.cosine_similarity(x, 2 * x) == pytest.approx(1.0)
    assert math.isinf(vqgan.psnr(x, x))
    imgs = np.random.default_rng(1).uniform(size=(20, 4, 4))
    assert vqgan.frechet_distance(imgs, imgs) == pytest.approx(0.0, abs=1e-8)


def test_gmm_recovers_two_clusters():
    rng = np.random.default_rng(3)
    x = np.vstack([rng.normal(-4, 0.3, (60, 2)), rng.normal(4, 0.3, (60, 2))])
    best, grid = vqgan.select_gmm(x, seed=0, max_k=4)
    assert best.n_components == 2
    assert len(grid) == 16
    assert np.allclose(sorted(best.means[:, 0]), [-4, 4], atol=0.2)
    draws = best.sample(500, seed=1)
    assert draws.shape == (500, 2)


def test_bad_covariance_type_raises():
    with pytest.raises(vqgan.VqganError):
        vqgan.fit_gmm(np.zeros((10, 2)), 1, covariance_type="banana")


def test_default_config_has_known_keys():
    cfg = vqgan.default_config()
    assert cfg["batch_size"] == "8"
    assert "variant" in cfg


@pytest.mark.skipif(not Path(DATA).exists(), reason="dataset not available")
def test_train_and_generate(tmp_path):
    out = vqgan.train(
        data_dir=DATA, n_samples=32, eval_samples=16, epochs=1, kbins=4, n_layers=1, out_dir=str(tmp_path)
    )
    assert len(out["history"]) == 1
    assert out["history"][0]["iterations"] == 4
    assert out["latents"].shape == (32, 7)
    ckpt = tmp_path / "checkpoint_epoch_01.vqg"
    assert ckpt.exists()
    assert vqgan.load_checkpoint(str(ckpt))["epoch"] == 1
    imgs = vqgan.generate(out["latents"][:3], str(ckpt))
    assert imgs.shape == (3, 28, 28)
    assert np.all((imgs >= 0) & (imgs <= 1))
