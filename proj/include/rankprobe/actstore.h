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

// Per-layer aggregated activations, one row per query-document pair.
//
// On-disk layout (all integers little-endian):
//
//   "APRB" | version u16 = 1 | dtype u8 (0 = f32, 1 = i8) | reserved u8 = 0
//   n_layers u32 | n_samples u32 | n_neurons u32
//   n_samples x { id_len u16 | id bytes (UTF-8) }
//   n_layers  x { scale f64 | n_samples * n_neurons codes, row-major }
//   crc32 u32 over every preceding byte
//
// f32 codes are IEEE-754 binary32 with scale 1. i8 codes are symmetric
// linear: value = code * scale, code in [-127, 127].

#ifndef RANKPROBE_ACTSTORE_H_
#define RANKPROBE_ACTSTORE_H_

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace rankprobe::act {

enum class DType : uint8_t { kF32 = 0, kI8 = 1 };
enum class AggregationMode { kMean, kMax };

std::string to_string(DType dtype);
DType parse_dtype(std::string_view text);
AggregationMode parse_aggregation(std::string_view text);

// Column-wise mean or max over a (n_tokens x n_neurons) matrix.
Eigen::VectorXd aggregate_tokens(const Eigen::Ref<const Eigen::MatrixXd>& token_acts,
                                 AggregationMode mode);

struct Quantized {
  std::vector<uint8_t> bytes;
  double scale = 1.0;
};

Quantized quantize(std::span<const double> values, DType dtype);

// Throws std::invalid_argument when bytes.size() does not hold exactly
// `count` codes of `dtype`.
std::vector<double> dequantize(std::span<const uint8_t> bytes, double scale,
                               DType dtype, size_t count);

class StoreError : public std::runtime_error {
 public:
  enum class Kind { kBadMagic, kUnsupportedVersion, kTruncated, kChecksum, kInvalid };
  StoreError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr uint16_t kStoreVersion = 1;

class ActivationStore {
 public:
  ActivationStore() = default;

  // Quantizes each (n_samples x n_neurons) layer matrix with one scale per
  // layer.
  static ActivationStore from_layers(std::vector<std::string> pair_ids,
                                     const std::vector<Eigen::MatrixXd>& layers,
                                     DType dtype);

  // Builds a store from already-quantized payloads; validates shapes.
  static ActivationStore from_codes(std::vector<std::string> pair_ids,
                                    size_t n_neurons, DType dtype,
                                    std::vector<double> scales,
                                    std::vector<std::vector<uint8_t>> payloads);

  size_t n_layers() const { return scales_.size(); }
  size_t n_samples() const { return pair_ids_.size(); }
  size_t n_neurons() const { return n_neurons_; }
  DType dtype() const { return dtype_; }
  const std::vector<std::string>& pair_ids() const { return pair_ids_; }
  double scale(size_t layer) const { return scales_.at(layer); }
  std::span<const uint8_t> codes(size_t layer) const { return payloads_.at(layer); }

  // Dequantized (n_samples x n_neurons) view of one layer.
  Eigen::MatrixXd layer(size_t layer) const;
  Eigen::VectorXd row(size_t layer, size_t sample) const;

  // Row of `pair_id`; throws std::out_of_range naming it.
  size_t row_of(const std::string& pair_id) const;
  bool contains(const std::string& pair_id) const {
    return index_.contains(pair_id);
  }

  bool operator==(const ActivationStore& other) const;

 private:
  void build_index();

  std::vector<std::string> pair_ids_;
  size_t n_neurons_ = 0;
  DType dtype_ = DType::kF32;
  std::vector<double> scales_;
  std::vector<std::vector<uint8_t>> payloads_;
  std::unordered_map<std::string, size_t> index_;
};

std::string serialize_store(const ActivationStore& store);
ActivationStore parse_store(std::string_view bytes);

void write_store(const ActivationStore& store, const std::string& path);
ActivationStore read_store(const std::string& path);

// One planted linear signal: after generation,
//   weights . acts[layer][neurons] == labels + N(0, noise_sd)
// holds row by row (before storage rounding).
struct PlantedSignal {
  size_t layer = 0;
  std::vector<size_t> neurons;
  std::vector<double> weights;
  std::vector<double> labels;
  double noise_sd = 0.0;
};

struct SynthOptions {
  uint64_t seed = 0;
  size_t n_samples = 0;
  size_t n_layers = 1;
  size_t n_neurons = 1;
  DType dtype = DType::kF32;
  // Defaults to p000000, p000001, ... when empty.
  std::vector<std::string> pair_ids;
};

// Background activations are iid N(0, 1). Each planted neuron set is moved
// by the smallest change (along `weights`) that makes the weighted sum hit
// its target, so the signal is spread across the set rather than copied
// into every neuron.
ActivationStore synth_activations(const SynthOptions& options,
                                  std::span<const PlantedSignal> planted);

std::vector<std::string> default_pair_ids(size_t n);

}  // namespace rankprobe::act

#endif  // RANKPROBE_ACTSTORE_H_
