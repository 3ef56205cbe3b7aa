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

#include "rankprobe/actstore.h"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include "rankprobe/common.h"

namespace rankprobe::act {
namespace {

constexpr char kMagic[4] = {'A', 'P', 'R', 'B'};
constexpr size_t kHeaderSize = 4 + 2 + 1 + 1 + 4 + 4 + 4;

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

template <typename T>
void put_le(std::string& out, T value) {
  using U = std::make_unsigned_t<
      std::conditional_t<std::is_floating_point_v<T>,
                         std::conditional_t<sizeof(T) == 8, int64_t, int32_t>, T>>;
  U bits;
  std::memcpy(&bits, &value, sizeof(T));
  for (size_t i = 0; i < sizeof(T); ++i) {
    out += static_cast<char>((bits >> (8 * i)) & 0xFF);
  }
}

template <typename T>
T get_le(const uint8_t* p) {
  using U = std::make_unsigned_t<
      std::conditional_t<std::is_floating_point_v<T>,
                         std::conditional_t<sizeof(T) == 8, int64_t, int32_t>, T>>;
  U bits = 0;
  for (size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(p[i]) << (8 * i);
  T value;
  std::memcpy(&value, &bits, sizeof(T));
  return value;
}

size_t code_size(DType dtype) { return dtype == DType::kF32 ? 4 : 1; }

uint32_t crc32_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths, so feed large buffers in chunks.
  const auto* p = reinterpret_cast<const Bytef*>(bytes.data());
  size_t left = bytes.size();
  while (left > 0) {
    const auto chunk = static_cast<uInt>(std::min<size_t>(left, 1u << 30));
    crc = crc32(crc, p, chunk);
    p += chunk;
    left -= chunk;
  }
  return static_cast<uint32_t>(crc);
}

}  // namespace

std::string to_string(DType dtype) {
  return dtype == DType::kF32 ? "f32" : "i8";
}

DType parse_dtype(std::string_view text) {
  if (text == "f32") return DType::kF32;
  if (text == "i8") return DType::kI8;
  throw ConfigError("unknown dtype '" + std::string(text) + "' (expected f32 or i8)");
}

AggregationMode parse_aggregation(std::string_view text) {
  if (text == "mean") return AggregationMode::kMean;
  if (text == "max") return AggregationMode::kMax;
  throw ConfigError("unknown aggregation '" + std::string(text) +
                    "' (expected mean or max)");
}

Eigen::VectorXd aggregate_tokens(const Eigen::Ref<const Eigen::MatrixXd>& token_acts,
                                 AggregationMode mode) {
  if (token_acts.rows() == 0) throw std::invalid_argument("no tokens to aggregate");
  if (mode == AggregationMode::kMean) return token_acts.colwise().mean().transpose();
  return token_acts.colwise().maxCoeff().transpose();
}

Quantized quantize(std::span<const double> values, DType dtype) {
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("cannot quantize non-finite value");
  }
  Quantized q;
  if (dtype == DType::kF32) {
    std::string buf;
    buf.reserve(values.size() * 4);
    for (double v : values) {
      const auto f = static_cast<float>(v);
      if (!std::isfinite(f)) throw std::invalid_argument("value overflows f32");
      put_le<float>(buf, f);
    }
    q.bytes.assign(buf.begin(), buf.end());
    q.scale = 1.0;
    return q;
  }
  double max_abs = 0.0;
  for (double v : values) max_abs = std::max(max_abs, std::abs(v));
  q.bytes.resize(values.size());
  if (max_abs == 0.0) {
    q.scale = 1.0;
    return q;
  }
  q.scale = max_abs / 127.0;
  for (size_t i = 0; i < values.size(); ++i) {
    // v * 127 / max_abs equals v / scale but avoids rounding 1/127 first.
    const long code = std::lround(values[i] * 127.0 / max_abs);
    q.bytes[i] = static_cast<uint8_t>(static_cast<int8_t>(std::clamp(code, -127L, 127L)));
  }
  return q;
}

std::vector<double> dequantize(std::span<const uint8_t> bytes, double scale,
                               DType dtype, size_t count) {
  if (bytes.size() != count * code_size(dtype)) {
    throw std::invalid_argument("payload holds " + std::to_string(bytes.size()) +
                                " bytes, expected " +
                                std::to_string(count * code_size(dtype)));
  }
  std::vector<double> out(count);
  if (dtype == DType::kF32) {
    for (size_t i = 0; i < count; ++i) out[i] = get_le<float>(bytes.data() + 4 * i);
  } else {
    for (size_t i = 0; i < count; ++i) {
      out[i] = static_cast<int8_t>(bytes[i]) * scale;
    }
  }
  return out;
}

ActivationStore ActivationStore::from_layers(std::vector<std::string> pair_ids,
                                             const std::vector<Eigen::MatrixXd>& layers,
                                             DType dtype) {
  if (layers.empty()) throw std::invalid_argument("store needs at least one layer");
  const auto n = static_cast<Eigen::Index>(pair_ids.size());
  const Eigen::Index d = layers[0].cols();
  std::vector<double> scales;
  std::vector<std::vector<uint8_t>> payloads;
  for (const auto& m : layers) {
    if (m.rows() != n || m.cols() != d) {
      throw std::invalid_argument("layer matrices must all be n_samples x n_neurons");
    }
    // Row-major flattening.
    std::vector<double> flat(static_cast<size_t>(n * d));
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) flat[static_cast<size_t>(i * d + j)] = m(i, j);
    }
    Quantized q = quantize(flat, dtype);
    scales.push_back(q.scale);
    payloads.push_back(std::move(q.bytes));
  }
  return from_codes(std::move(pair_ids), static_cast<size_t>(d), dtype,
                    std::move(scales), std::move(payloads));
}

ActivationStore ActivationStore::from_codes(std::vector<std::string> pair_ids,
                                            size_t n_neurons, DType dtype,
                                            std::vector<double> scales,
                                            std::vector<std::vector<uint8_t>> payloads) {
  if (scales.empty() || scales.size() != payloads.size()) {
    throw std::invalid_argument("need one scale and one payload per layer");
  }
  if (n_neurons == 0) throw std::invalid_argument("n_neurons must be positive");
  if (pair_ids.empty()) throw std::invalid_argument("store needs at least one sample");
  const size_t expected = pair_ids.size() * n_neurons * code_size(dtype);
  for (size_t l = 0; l < scales.size(); ++l) {
    if (!(scales[l] > 0.0) || !std::isfinite(scales[l])) {
      throw std::invalid_argument("layer " + std::to_string(l) + " has invalid scale");
    }
    if (payloads[l].size() != expected) {
      throw std::invalid_argument("layer " + std::to_string(l) + " payload size mismatch");
    }
    if (dtype == DType::kF32) {
      for (size_t i = 0; i < payloads[l].size(); i += 4) {
        if (!std::isfinite(get_le<float>(payloads[l].data() + i))) {
          throw std::invalid_argument("layer " + std::to_string(l) +
                                      " holds a non-finite value");
        }
      }
    } else {
      for (uint8_t b : payloads[l]) {
        if (static_cast<int8_t>(b) == -128) {
          throw std::invalid_argument("i8 code -128 is out of range");
        }
      }
    }
  }
  ActivationStore s;
  s.pair_ids_ = std::move(pair_ids);
  s.n_neurons_ = n_neurons;
  s.dtype_ = dtype;
  s.scales_ = std::move(scales);
  s.payloads_ = std::move(payloads);
  s.build_index();
  return s;
}

void ActivationStore::build_index() {
  index_.clear();
  index_.reserve(pair_ids_.size());
  for (size_t i = 0; i < pair_ids_.size(); ++i) {
    if (!index_.emplace(pair_ids_[i], i).second) {
      throw std::invalid_argument("duplicate pair_id in store: " + pair_ids_[i]);
    }
  }
}

Eigen::MatrixXd ActivationStore::layer(size_t l) const {
  const auto values = dequantize(payloads_.at(l), scales_.at(l), dtype_,
                                 n_samples() * n_neurons_);
  Eigen::MatrixXd m(n_samples(), n_neurons_);
  for (size_t i = 0; i < n_samples(); ++i) {
    for (size_t j = 0; j < n_neurons_; ++j) m(i, j) = values[i * n_neurons_ + j];
  }
  return m;
}

Eigen::VectorXd ActivationStore::row(size_t l, size_t sample) const {
  if (sample >= n_samples()) throw std::out_of_range("sample index out of range");
  const size_t width = n_neurons_ * code_size(dtype_);
  const auto values = dequantize(
      std::span<const uint8_t>(payloads_.at(l)).subspan(sample * width, width),
      scales_.at(l), dtype_, n_neurons_);
  return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                           static_cast<Eigen::Index>(values.size()));
}

size_t ActivationStore::row_of(const std::string& pair_id) const {
  auto it = index_.find(pair_id);
  if (it == index_.end()) throw std::out_of_range("pair_id not in store: " + pair_id);
  return it->second;
}

bool ActivationStore::operator==(const ActivationStore& other) const {
  return pair_ids_ == other.pair_ids_ && n_neurons_ == other.n_neurons_ &&
         dtype_ == other.dtype_ && scales_ == other.scales_ &&
         payloads_ == other.payloads_;
}

std::string serialize_store(const ActivationStore& store) {
  std::string out;
  out.append(kMagic, 4);
  put_le<uint16_t>(out, kStoreVersion);
  put_le<uint8_t>(out, static_cast<uint8_t>(store.dtype()));
  put_le<uint8_t>(out, 0);
  put_le<uint32_t>(out, static_cast<uint32_t>(store.n_layers()));
  put_le<uint32_t>(out, static_cast<uint32_t>(store.n_samples()));
  put_le<uint32_t>(out, static_cast<uint32_t>(store.n_neurons()));
  for (const auto& id : store.pair_ids()) {
    if (id.size() > std::numeric_limits<uint16_t>::max()) {
      throw std::invalid_argument("pair_id longer than 65535 bytes");
    }
    put_le<uint16_t>(out, static_cast<uint16_t>(id.size()));
    out += id;
  }
  for (size_t l = 0; l < store.n_layers(); ++l) {
    put_le<double>(out, store.scale(l));
    const auto codes = store.codes(l);
    out.append(reinterpret_cast<const char*>(codes.data()), codes.size());
  }
  put_le<uint32_t>(out, crc32_of(out));
  return out;
}

ActivationStore parse_store(std::string_view bytes) {
  using K = StoreError::Kind;
  const auto* p = reinterpret_cast<const uint8_t*>(bytes.data());
  if (bytes.size() < 4 || std::memcmp(p, kMagic, 4) != 0) {
    throw StoreError(K::kBadMagic, "bad magic: not an activation store");
  }
  if (bytes.size() < kHeaderSize) throw StoreError(K::kTruncated, "truncated header");
  const auto version = get_le<uint16_t>(p + 4);
  if (version != kStoreVersion) {
    throw StoreError(K::kUnsupportedVersion,
                     "unsupported store version " + std::to_string(version));
  }
  const uint8_t dtype_tag = p[6];
  if (dtype_tag > 1) {
    throw StoreError(K::kInvalid, "unknown dtype tag " + std::to_string(dtype_tag));
  }
  const auto dtype = static_cast<DType>(dtype_tag);
  const uint64_t n_layers = get_le<uint32_t>(p + 8);
  const uint64_t n_samples = get_le<uint32_t>(p + 12);
  const uint64_t n_neurons = get_le<uint32_t>(p + 16);

  size_t pos = kHeaderSize;
  auto need = [&](uint64_t n) {
    if (n > bytes.size() || pos > bytes.size() - n) {
      throw StoreError(K::kTruncated, "truncated store file");
    }
  };
  std::vector<std::string> ids;
  ids.reserve(std::min<uint64_t>(n_samples, bytes.size()));
  for (uint64_t i = 0; i < n_samples; ++i) {
    need(2);
    const uint16_t len = get_le<uint16_t>(p + pos);
    pos += 2;
    need(len);
    ids.emplace_back(bytes.substr(pos, len));
    pos += len;
  }
  const uint64_t payload = n_samples * n_neurons * code_size(dtype);
  std::vector<double> scales;
  std::vector<std::vector<uint8_t>> payloads;
  for (uint64_t l = 0; l < n_layers; ++l) {
    need(8);
    scales.push_back(get_le<double>(p + pos));
    pos += 8;
    need(payload);
    payloads.emplace_back(p + pos, p + pos + payload);
    pos += payload;
  }
  need(4);
  const uint32_t stored_crc = get_le<uint32_t>(p + pos);
  if (pos + 4 != bytes.size()) {
    throw StoreError(K::kInvalid, "trailing bytes after checksum");
  }
  if (crc32_of(bytes.substr(0, pos)) != stored_crc) {
    throw StoreError(K::kChecksum, "checksum mismatch: store file is corrupt");
  }
  try {
    return ActivationStore::from_codes(std::move(ids), n_neurons, dtype,
                                       std::move(scales), std::move(payloads));
  } catch (const std::invalid_argument& e) {
    throw StoreError(K::kInvalid, e.what());
  }
}

void write_store(const ActivationStore& store, const std::string& path) {
  write_file(path, serialize_store(store));
}

ActivationStore read_store(const std::string& path) {
  return parse_store(read_file(path));
}

std::vector<std::string> default_pair_ids(size_t n) {
  std::vector<std::string> ids(n);
  for (size_t i = 0; i < n; ++i) {
    std::string num = std::to_string(i);
    ids[i] = "p" + std::string(num.size() < 6 ? 6 - num.size() : 0, '0') + num;
  }
  return ids;
}

ActivationStore synth_activations(const SynthOptions& options,
                                  std::span<const PlantedSignal> planted) {
  const size_t n = options.n_samples;
  const size_t d = options.n_neurons;
  if (n == 0 || d == 0 || options.n_layers == 0) {
    throw std::invalid_argument("synthetic store dimensions must be positive");
  }
  std::vector<std::string> ids =
      options.pair_ids.empty() ? default_pair_ids(n) : options.pair_ids;
  if (ids.size() != n) throw std::invalid_argument("pair_ids length != n_samples");

  for (const auto& p : planted) {
    if (p.layer >= options.n_layers) {
      throw std::invalid_argument("planted layer " + std::to_string(p.layer) +
                                  " out of range");
    }
    if (p.neurons.empty() || p.neurons.size() != p.weights.size()) {
      throw std::invalid_argument("planted neurons and weights must align");
    }
    for (size_t j : p.neurons) {
      if (j >= d) {
        throw std::invalid_argument("planted neuron index " + std::to_string(j) +
                                    " out of range");
      }
    }
    if (p.labels.size() != n) throw std::invalid_argument("planted labels length != n_samples");
  }

  std::vector<Eigen::MatrixXd> layers;
  layers.reserve(options.n_layers);
  for (size_t l = 0; l < options.n_layers; ++l) {
    Rng rng(derive_seed(options.seed, static_cast<uint64_t>(l)));
    Eigen::MatrixXd m(n, d);
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < d; ++j) m(i, j) = rng.normal();
    }
    layers.push_back(std::move(m));
  }

  for (size_t k = 0; k < planted.size(); ++k) {
    const auto& p = planted[k];
    double w_sq = 0.0;
    for (double w : p.weights) w_sq += w * w;
    if (!(w_sq > 0.0)) throw std::invalid_argument("planted weights are all zero");
    Rng noise(derive_seed(options.seed, "planted-noise-" + std::to_string(k)));
    auto& m = layers[p.layer];
    for (size_t i = 0; i < n; ++i) {
      const double target = p.labels[i] + (p.noise_sd > 0.0 ? p.noise_sd * noise.normal() : 0.0);
      if (p.neurons.size() == 1) {
        m(i, p.neurons[0]) = target / p.weights[0];
        continue;
      }
      double current = 0.0;
      for (size_t t = 0; t < p.neurons.size(); ++t) current += p.weights[t] * m(i, p.neurons[t]);
      const double step = (target - current) / w_sq;
      for (size_t t = 0; t < p.neurons.size(); ++t) m(i, p.neurons[t]) += p.weights[t] * step;
    }
  }
  return ActivationStore::from_layers(std::move(ids), layers, options.dtype);
}

}  // namespace rankprobe::act
