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

#ifndef RANKPROBE_COMMON_H_
#define RANKPROBE_COMMON_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rankprobe {

// Invalid user configuration or arguments. The CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Deterministic random source whose output is identical on every platform.
// The std:: distributions are implementation-defined, so only the raw
// mt19937_64 stream is used and everything else is derived here.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, bound), rejection sampled to avoid modulo bias.
  uint64_t below(uint64_t bound);

  // Standard normal via the Marsaglia polar method.
  double normal();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (size_t i = items.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  // k distinct indices from [0, n), in sampling order.
  std::vector<size_t> sample_without_replacement(size_t n, size_t k);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

uint64_t splitmix64(uint64_t x);

// FNV-1a over the bytes of `s`.
uint64_t hash_string(std::string_view s);

// Seed for an independent stream keyed by (seed, key).
uint64_t derive_seed(uint64_t seed, std::string_view key);
uint64_t derive_seed(uint64_t seed, uint64_t key);

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

std::string trim(std::string_view s);

// Minimal RFC 4180 field handling: quotes a field only when it contains a
// comma, quote, or line break.
std::string csv_field(std::string_view s);
std::vector<std::string> parse_csv_line(std::string_view line);
std::vector<std::string> split(std::string_view s, char sep);

// Whole-file helpers; both throw std::runtime_error naming the path.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index is
// processed exactly once; callers write results into slot i, so output order
// never depends on scheduling. The first exception thrown is rethrown.
void parallel_for(size_t n, unsigned threads,
                  const std::function<void(size_t)>& fn);

}  // namespace rankprobe

#endif  // RANKPROBE_COMMON_H_
