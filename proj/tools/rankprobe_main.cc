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

// rankprobe command-line tool. Exit codes: 0 success, 2 configuration
// error, 1 runtime error.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rankprobe/common.h"
#include "rankprobe/report.h"

namespace {

using rankprobe::report::Context;

void print_curves(const std::vector<rankprobe::probe::LayerCurve>& curves) {
  for (const auto& c : curves) {
    std::cout << c.feature_name << ": " << to_string(rankprobe::probe::verdict(c))
              << " (argmax layer " << c.argmax_layer << ", max R^2 "
              << rankprobe::format_double(c.max_r2) << ", final R^2 "
              << rankprobe::format_double(c.final_r2()) << ")\n";
  }
}

int run(int argc, char** argv) {
  CLI::App app{"Probe ranking-model activations for IR features"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "INI-style experiment config")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Random seed (overrides run.seed)");
  app.add_option("--out", out, "Output directory (overrides run.out)");
  app.add_option("--threads", threads, "Worker threads (overrides run.threads)")
      ->check(CLI::PositiveNumber);
  app.add_option("--set", overrides, "Override a config key: section.key=value");

  struct Command {
    const char* name;
    const char* help;
  };
  const std::vector<Command> commands = {
      {"features", "Compute IR feature labels for a run"},
      {"balance", "Build label-balanced probing datasets"},
      {"probe", "Fit per-layer probes and emit curves and verdicts"},
      {"group-probe", "Probe composite feature expressions"},
      {"compare", "Tabulate R^2 across runs (spider-chart data)"},
      {"validate", "Attribute scores to probe neurons on the final layer"},
      {"synth", "Generate a synthetic store with a planted signal"},
      {"demo-corpus", "Write a synthetic run, queries and collection"},
      {"example-config", "Print a config template"},
  };
  for (const auto& c : commands) app.add_subcommand(c.name, c.help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  if (cmd == "example-config") {
    std::cout << rankprobe::report::example_config();
    return 0;
  }

  rankprobe::report::Config config;
  if (!config_path.empty()) config = rankprobe::report::Config::load(config_path);
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw rankprobe::ConfigError("--set expects section.key=value, got '" + o + "'");
    }
    config.set(o.substr(0, eq), o.substr(eq + 1));
  }
  const Context ctx = rankprobe::report::make_context(std::move(config), out, seed, threads);

  namespace rp = rankprobe::report;
  if (cmd == "features") {
    const auto tables = rp::cmd_features(ctx);
    std::cout << "wrote " << tables.size() << " label files to " << (ctx.out / "labels").string()
              << "\n";
  } else if (cmd == "balance") {
    for (const auto& d : rp::cmd_balance(ctx)) {
      std::cout << d.feature_name << ": " << d.pair_ids.size() << " pairs\n";
    }
  } else if (cmd == "probe") {
    print_curves(rp::cmd_probe(ctx));
  } else if (cmd == "group-probe") {
    for (const auto& r : rp::cmd_group_probe(ctx)) {
      print_curves({r.curve});
      for (const auto& leaf : r.leaf_curves) {
        std::cout << "  " << leaf.feature_name << " at layer " << r.curve.argmax_layer
                  << ": R^2 "
                  << rankprobe::format_double(
                         leaf.r2_test.at(static_cast<size_t>(r.curve.argmax_layer)))
                  << "\n";
      }
    }
  } else if (cmd == "compare") {
    const auto table = rp::cmd_compare(ctx);
    std::cout << "compared " << table.features.size() << " features across "
              << table.runs.size() << " runs\n";
  } else if (cmd == "validate") {
    const auto s = rp::cmd_validate(ctx);
    std::cout << s.feature << ": " << s.cases_at_95th << "/" << s.n_pairs
              << " pairs at the 95th percentile\n";
  } else if (cmd == "synth") {
    const auto store = rp::cmd_synth(ctx);
    std::cout << "wrote store with " << store.n_layers() << " layers, " << store.n_samples()
              << " samples, " << store.n_neurons() << " neurons\n";
  } else if (cmd == "demo-corpus") {
    rp::cmd_demo_corpus(ctx);
    std::cout << "wrote demo corpus to " << (ctx.out / "corpus").string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const rankprobe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
