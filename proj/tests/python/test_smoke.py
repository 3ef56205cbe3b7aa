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

import json
import math
import os
from pathlib import Path

import numpy as np
import pytest

import rankprobe as rp

DATA = Path(os.environ.get("RANKPROBE_TEST_DATA",
                           Path(__file__).resolve().parent.parent / "data"))


def test_tokenize_and_features():
    assert rp.tokenize("The cat, the CAT!") == ["the", "cat", "the", "cat"]
    assert len(rp.feature_names()) == 24
    assert rp.resolve_feature("QTR") == "covered_qt_ratio"
    v = rp.compute_feature("bm25", "a", "a", ["a", "b"], k1=1.0)
    assert v == pytest.approx(math.log(2.0), abs=1e-15)
    with pytest.raises(rp.ConfigError):
        rp.compute_feature("BM26", "a", "a", ["a"])


def test_aggregation_matches_golden():
    golden = json.loads((DATA / "aggregation_golden.json").read_text())
    for case in golden["cases"]:
        tokens = np.array(case["tokens"])
        for mode in ("mean", "max"):
            got = rp.aggregate_tokens(tokens, mode)
            np.testing.assert_allclose(got, case[mode], atol=golden["tolerance"])


def test_store_round_trip_and_golden(tmp_path):
    rng = np.random.default_rng(0)
    layers = [rng.normal(size=(5, 3)) for _ in range(2)]
    ids = [f"q:{i}" for i in range(5)]
    store = rp.ActivationStore.from_layers(ids, layers, "i8")
    path = tmp_path / "s.aprb"
    store.write(str(path))
    back = rp.ActivationStore.read(str(path))
    assert back == store
    assert back.pair_ids == ids
    assert back.dtype == "i8"
    np.testing.assert_allclose(back.layer(1), layers[1], atol=back.scale(1) / 2 + 1e-12)

    golden = (DATA / "golden_f32.aprb").read_bytes()
    g = rp.ActivationStore.from_bytes(golden)
    assert g.to_bytes() == golden
    bad = bytearray(golden)
    bad[30] ^= 0x5A
    with pytest.raises(rp.StoreError):
        rp.ActivationStore.from_bytes(bytes(bad))


def test_quantize_codes():
    codes, scale = rp.quantize([-1.0, 0.5, 1.0, 0.0], "i8")
    assert list(np.frombuffer(codes, dtype=np.int8)) == [-127, 64, 127, 0]
    assert scale == pytest.approx(1 / 127)


def test_probe_fit_and_sweep():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(200, 6))
    y = 3.0 * x[:, 2] + 1.0
    m = rp.fit_probe(x, y, alpha=0.0, tol=1e-12)
    np.testing.assert_allclose(m.predict(x), y, atol=1e-8)
    assert rp.ProbeModel.from_json(m.to_json()).intercept == m.intercept
    assert rp.r2_score([1, 2, 3], [3, 2, 1]) == pytest.approx(-3.0)

    labels = list(rng.uniform(0, 10, size=400))
    store = rp.synth_store(seed=3, n_samples=400, n_layers=3, n_neurons=32, layer=1,
                           neurons=[4, 9, 20], weights=[1, 1, 1], labels=labels,
                           noise_sd=0.03)
    curve, models = rp.sweep_layers(store, "planted", store.pair_ids, labels, seed=3)
    assert curve["argmax_layer"] == 1
    assert curve["verdict"] == "present"
    assert len(models) == 3


def test_attribution():
    head = rp.ScoreHead(np.array([1.0, 1.0]))
    c = rp.neuron_contributions(np.array([3.0, -2.0]), head, np.zeros(2))
    assert list(c) == [3.0, -2.0]
    assert head.score(np.array([3.0, -2.0])) == 1.0
    assert rp.ScoreHead.from_json(head.to_json()).bias == 0.0
    assert rp.group_percentile([0.5] * 20, [1, 2], n_random=100) == 100.0


def test_run_command_pipeline(tmp_path):
    cfg = "[synth]\nn_samples = 300\nn_layers = 3\nn_neurons = 24\nlayer = 2\n"
    rp.run_command("synth", cfg, str(tmp_path), seed=5)
    cfg += f"[probe]\nfeatures = synthetic\nstore = {tmp_path / 'store.aprb'}\n"
    rp.run_command("probe", cfg, str(tmp_path), seed=5)
    verdicts = json.loads((tmp_path / "verdicts.json").read_text())
    assert verdicts["synthetic"]["verdict"] == "present"
    with pytest.raises(rp.ConfigError):
        rp.run_command("nope", cfg, str(tmp_path))
