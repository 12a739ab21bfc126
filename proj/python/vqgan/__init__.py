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

"""Hybrid VAE and patch quantum WGAN.

Thin wrapper over the compiled ``_vqgan`` module. Configuration overrides
are plain ``{key: value}`` string maps using the same keys as the CLI's
``--set``.
"""

from ._vqgan import (
    GaussianMixture,
    VqganError,
    cosine_similarity,
    default_config,
    evaluate,
    fit_gmm,
    frechet_distance,
    generate,
    jsd,
    load_checkpoint,
    load_dataset,
    psnr,
    select_gmm,
    ssim,
    subgenerator_probs,
)
from ._vqgan import train as _train

__all__ = [
    "GaussianMixture",
    "VqganError",
    "cosine_similarity",
    "default_config",
    "evaluate",
    "fit_gmm",
    "frechet_distance",
    "generate",
    "jsd",
    "load_checkpoint",
    "load_dataset",
    "psnr",
    "select_gmm",
    "ssim",
    "subgenerator_probs",
    "train",
]


def _as_overrides(overrides, kwargs):
    merged = dict(overrides or {})
    merged.update(kwargs)
    return {str(k): str(v) for k, v in merged.items()}


def train(overrides=None, **kwargs):
    """Run training. Keyword arguments are merged into ``overrides``."""
    return _train(_as_overrides(overrides, kwargs))
