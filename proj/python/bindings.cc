// Copyright 2026 The rankprobe Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rankprobe/actstore.h"
#include "rankprobe/attribution.h"
#include "rankprobe/common.h"
#include "rankprobe/corpus.h"
#include "rankprobe/irfeatures.h"
#include "rankprobe/probekit.h"
#include "rankprobe/report.h"

namespace py = pybind11;
using namespace rankprobe;

namespace {

ir::CorpusStats stats_for(const std::vector<std::string>& corpus) {
  std::vector<ir::TokenStream> docs;
  for (const auto& d : corpus) docs.push_back(ir::tokenize(d));
  return ir::CorpusStats::from_documents("q", docs);
}

double compute_feature(const std::string& name, const std::string& query,
                       const std::string& doc, const std::vector<std::string>& corpus,
                       double k1, double b) {
  const auto& info = ir::resolve_feature(name);
  return ir::compute_feature(info.feature, ir::tokenize(query), ir::tokenize(doc),
                             stats_for(corpus), ir::Bm25Params{k1, b});
}

probe::ProbeConfig make_config(double alpha, double l2, int max_iter, double tol,
                               int k_folds, uint64_t seed) {
  probe::ProbeConfig c;
  c.alpha = alpha;
  c.l2 = l2;
  c.max_iter = max_iter;
  c.tol = tol;
  c.k_folds = k_folds;
  c.seed = seed;
  c.split.seed = seed;
  c.validate();
  return c;
}

py::dict curve_dict(const probe::LayerCurve& c) {
  py::dict d;
  d["feature"] = c.feature_name;
  d["r2_test"] = c.r2_test;
  d["r2_val"] = c.r2_val;
  d["r2_train"] = c.r2_train;
  d["cv_r2"] = c.cv_r2;
  d["argmax_layer"] = c.argmax_layer;
  d["max_r2"] = c.max_r2;
  d["final_r2"] = c.final_r2();
  d["verdict"] = probe::to_string(probe::verdict(c));
  return d;
}

// Runs one CLI command in-process from INI text.
void run_command(const std::string& command, const std::string& config_text,
                 const std::string& out, uint64_t seed, unsigned threads) {
  const auto ctx = report::make_context(report::Config::parse(config_text), out, seed, threads);
  if (command == "features") {
    report::cmd_features(ctx);
  } else if (command == "balance") {
    report::cmd_balance(ctx);
  } else if (command == "probe") {
    report::cmd_probe(ctx);
  } else if (command == "group-probe") {
    report::cmd_group_probe(ctx);
  } else if (command == "compare") {
    report::cmd_compare(ctx);
  } else if (command == "validate") {
    report::cmd_validate(ctx);
  } else if (command == "synth") {
    report::cmd_synth(ctx);
  } else if (command == "demo-corpus") {
    report::cmd_demo_corpus(ctx);
  } else {
    throw ConfigError("unknown command '" + command + "'");
  }
}

}  // namespace

PYBIND11_MODULE(_rankprobe, m) {
  m.doc() = "Layer-wise probing of ranking-model activations for IR features.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<act::StoreError>(m, "StoreError", PyExc_RuntimeError);

  // Features.
  m.def("tokenize", [](const std::string& text) { return ir::tokenize(text).tokens; });
  m.def("feature_names", [] {
    std::vector<std::string> out;
    for (const auto& f : ir::feature_registry()) out.push_back(f.id);
    return out;
  });
  m.def("resolve_feature", [](const std::string& name) { return ir::resolve_feature(name).id; });
  m.def("compute_feature", &compute_feature, py::arg("name"), py::arg("query"), py::arg("doc"),
        py::arg("corpus"), py::arg("k1") = 1.2, py::arg("b") = 0.75,
        "One feature for a query-document pair; `corpus` lists the query's documents.");
  m.def(
      "read_labels",
      [](const std::string& path) {
        const auto t = ir::read_labels(path);
        return py::make_tuple(t.feature_name, t.pair_ids, t.values);
      },
      py::arg("path"));
  m.def(
      "write_labels",
      [](const std::string& feature, std::vector<std::string> pair_ids,
         std::vector<double> values, const std::string& path) {
        if (pair_ids.size() != values.size()) {
          throw std::invalid_argument("pair_ids and values differ in length");
        }
        ir::write_labels(ir::LabelTable{feature, std::move(pair_ids), std::move(values)}, path);
      },
      py::arg("feature"), py::arg("pair_ids"), py::arg("values"), py::arg("path"));

  // Activation store.
  m.def(
      "aggregate_tokens",
      [](const Eigen::MatrixXd& tokens, const std::string& mode) {
        return act::aggregate_tokens(tokens, act::parse_aggregation(mode));
      },
      py::arg("tokens"), py::arg("mode") = "mean");
  m.def(
      "quantize",
      [](const std::vector<double>& values, const std::string& dtype) {
        const auto q = act::quantize(values, act::parse_dtype(dtype));
        return py::make_tuple(py::bytes(reinterpret_cast<const char*>(q.bytes.data()),
                                        q.bytes.size()),
                              q.scale);
      },
      py::arg("values"), py::arg("dtype") = "i8");

  py::class_<act::ActivationStore>(m, "ActivationStore")
      .def_static(
          "from_layers",
          [](std::vector<std::string> pair_ids, const std::vector<Eigen::MatrixXd>& layers,
             const std::string& dtype) {
            return act::ActivationStore::from_layers(std::move(pair_ids), layers,
                                                     act::parse_dtype(dtype));
          },
          py::arg("pair_ids"), py::arg("layers"), py::arg("dtype") = "f32")
      .def_static("read", &act::read_store, py::arg("path"))
      .def_static("from_bytes",
                  [](const py::bytes& b) { return act::parse_store(std::string(b)); })
      .def("write", [](const act::ActivationStore& s, const std::string& path) {
        act::write_store(s, path);
      })
      .def("to_bytes", [](const act::ActivationStore& s) { return py::bytes(act::serialize_store(s)); })
      .def_property_readonly("n_layers", &act::ActivationStore::n_layers)
      .def_property_readonly("n_samples", &act::ActivationStore::n_samples)
      .def_property_readonly("n_neurons", &act::ActivationStore::n_neurons)
      .def_property_readonly("dtype",
                             [](const act::ActivationStore& s) { return act::to_string(s.dtype()); })
      .def_property_readonly("pair_ids", &act::ActivationStore::pair_ids)
      .def("scale", &act::ActivationStore::scale)
      .def("layer", &act::ActivationStore::layer)
      .def("row_of", &act::ActivationStore::row_of)
      .def("__eq__", &act::ActivationStore::operator==);

  m.def(
      "synth_store",
      [](uint64_t seed, size_t n_samples, size_t n_layers, size_t n_neurons, size_t layer,
         std::vector<size_t> neurons, std::vector<double> weights, std::vector<double> labels,
         double noise_sd, const std::string& dtype) {
        act::PlantedSignal sig{layer, std::move(neurons), std::move(weights), std::move(labels),
                               noise_sd};
        act::SynthOptions o;
        o.seed = seed;
        o.n_samples = n_samples;
        o.n_layers = n_layers;
        o.n_neurons = n_neurons;
        o.dtype = act::parse_dtype(dtype);
        return act::synth_activations(o, std::span<const act::PlantedSignal>(&sig, 1));
      },
      py::arg("seed"), py::arg("n_samples"), py::arg("n_layers"), py::arg("n_neurons"),
      py::arg("layer"), py::arg("neurons"), py::arg("weights"), py::arg("labels"),
      py::arg("noise_sd") = 0.0, py::arg("dtype") = "f32");

  // Probes.
  py::class_<probe::ProbeModel>(m, "ProbeModel")
      .def_readonly("feature", &probe::ProbeModel::feature)
      .def_readonly("layer", &probe::ProbeModel::layer)
      .def_readonly("coefficients", &probe::ProbeModel::coefficients)
      .def_readonly("intercept", &probe::ProbeModel::intercept)
      .def_readonly("nonzero_idx", &probe::ProbeModel::nonzero_idx)
      .def_readonly("r2_train", &probe::ProbeModel::r2_train)
      .def_readonly("r2_val", &probe::ProbeModel::r2_val)
      .def_readonly("r2_test", &probe::ProbeModel::r2_test)
      .def_readonly("iterations", &probe::ProbeModel::iterations)
      .def_readonly("converged", &probe::ProbeModel::converged)
      .def("predict", &probe::ProbeModel::predict)
      .def("to_json", &probe::model_to_json)
      .def_static("from_json", &probe::model_from_json);

  m.def(
      "fit_probe",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha, double l2,
         int max_iter, double tol) {
        return probe::fit_probe(x, y, make_config(alpha, l2, max_iter, tol, 5, 0));
      },
      py::arg("x"), py::arg("y"), py::arg("alpha") = 0.1, py::arg("l2") = 0.0,
      py::arg("max_iter") = 10000, py::arg("tol") = 1e-6);
  m.def(
      "cross_validate",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha, int k_folds,
         uint64_t seed) {
        const auto r = probe::cross_validate(x, y, make_config(alpha, 0.0, 10000, 1e-6, k_folds, seed));
        return py::make_tuple(r.mean_r2, r.fold_r2);
      },
      py::arg("x"), py::arg("y"), py::arg("alpha") = 0.1, py::arg("k_folds") = 5,
      py::arg("seed") = 0);
  m.def(
      "r2_score",
      [](const std::vector<double>& y, const std::vector<double>& p) {
        return probe::r2_score(y, p);
      },
      py::arg("y_true"), py::arg("y_pred"));
  m.def(
      "sweep_layers",
      [](const act::ActivationStore& store, const std::string& feature,
         std::vector<std::string> pair_ids, std::vector<double> labels, double alpha,
         uint64_t seed, unsigned threads) {
        corpus::ProbeDataset d;
        d.feature_name = feature;
        d.pair_ids = std::move(pair_ids);
        d.labels = std::move(labels);
        d.seed = seed;
        auto r = probe::sweep_layers(store, d, make_config(alpha, 0.0, 10000, 1e-6, 5, seed),
                                     threads);
        return py::make_tuple(curve_dict(r.curve), std::move(r.models));
      },
      py::arg("store"), py::arg("feature"), py::arg("pair_ids"), py::arg("labels"),
      py::arg("alpha") = 0.1, py::arg("seed") = 0, py::arg("threads") = 1,
      "Returns (curve dict, per-layer ProbeModels).");

  // Attribution.
  py::class_<attr::ScoreHead>(m, "ScoreHead")
      .def(py::init([](const Eigen::VectorXd& w, double bias) {
             return attr::ScoreHead{w, bias};
           }),
           py::arg("weights"), py::arg("bias") = 0.0)
      .def_readonly("weights", &attr::ScoreHead::weights)
      .def_readonly("bias", &attr::ScoreHead::bias)
      .def("score", &attr::ScoreHead::score)
      .def("to_json", &attr::head_to_json)
      .def_static("from_json", &attr::head_from_json)
      .def_static("read", &attr::read_head)
      .def("write", [](const attr::ScoreHead& h, const std::string& path) {
        attr::write_head(h, path);
      });
  m.def(
      "neuron_contributions",
      [](const Eigen::VectorXd& acts, const attr::ScoreHead& head, const Eigen::VectorXd& base) {
        return attr::neuron_contributions(acts, head, base).contributions;
      },
      py::arg("acts"), py::arg("head"), py::arg("baseline"));
  m.def(
      "group_percentile",
      [](const std::vector<double>& c, const std::vector<size_t>& group, uint64_t seed,
         size_t n_random) { return attr::group_percentile(c, group, seed, n_random); },
      py::arg("contributions"), py::arg("group"), py::arg("seed") = 0,
      py::arg("n_random") = attr::kRandomGroups);
  m.def(
      "validate_probe_neurons",
      [](const probe::ProbeModel& model, const act::ActivationStore& store,
         const attr::ScoreHead& head, size_t n_pairs, uint64_t seed, const std::string& baseline) {
        attr::ValidationOptions o;
        o.n_pairs = n_pairs;
        o.seed = seed;
        o.baseline = attr::parse_baseline(baseline);
        const auto s = attr::validate_probe_neurons(model, store, head, o);
        return py::make_tuple(s.cases_at_95th, s.percentiles);
      },
      py::arg("model"), py::arg("store"), py::arg("head"), py::arg("n_pairs") = 100,
      py::arg("seed") = 0, py::arg("baseline") = "zero",
      "Returns (cases_at_95th, per-pair percentiles).");

  // Orchestration.
  m.def("run_command", &run_command, py::arg("command"), py::arg("config"), py::arg("out"),
        py::arg("seed") = 0, py::arg("threads") = 1);
  m.def("example_config", &report::example_config);
}
