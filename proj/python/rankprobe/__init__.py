# Copyright 2026 The rankprobe Authors.
#
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
"""Python access to the rankprobe core."""

from rankprobe._rankprobe import (
    ActivationStore,
    ConfigError,
    ProbeModel,
    ScoreHead,
    StoreError,
    aggregate_tokens,
    compute_feature,
    cross_validate,
    example_config,
    feature_names,
    fit_probe,
    group_percentile,
    neuron_contributions,
    quantize,
    r2_score,
    read_labels,
    resolve_feature,
    run_command,
    sweep_layers,
    synth_store,
    tokenize,
    validate_probe_neurons,
    write_labels,
)

__all__ = [
    "ActivationStore",
    "ConfigError",
    "ProbeModel",
    "ScoreHead",
    "StoreError",
    "aggregate_tokens",
    "compute_feature",
    "cross_validate",
    "example_config",
    "feature_names",
    "fit_probe",
    "group_percentile",
    "neuron_contributions",
    "quantize",
    "r2_score",
    "read_labels",
    "resolve_feature",
    "run_command",
    "sweep_layers",
    "synth_store",
    "tokenize",
    "validate_probe_neurons",
    "write_labels",
]
