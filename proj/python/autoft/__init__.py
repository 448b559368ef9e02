# Copyright 2026 The AutoFT Authors.
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Routed fine-tuning for cross-domain click-through-rate models."""

from ._core import (
    AutoftCheckpoint,
    AutoftError,
    DcnCheckpoint,
    auc,
    generate_synth,
    gumbel_max_frequency,
    logloss,
    main,
    relaxed_pretrained_weight,
    results_table,
    routing_fractions,
    sigmoid,
    softmax,
)

__all__ = [
    "AutoftCheckpoint",
    "AutoftError",
    "DcnCheckpoint",
    "auc",
    "generate_synth",
    "gumbel_max_frequency",
    "logloss",
    "main",
    "relaxed_pretrained_weight",
    "results_table",
    "routing_fractions",
    "sigmoid",
    "softmax",
]
