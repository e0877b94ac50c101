#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "fedgroup/fedgroup.hpp"

namespace {

using fedgroup::ExperimentConfig;

using Overrides = std::vector<std::pair<std::string, std::string>>;

void add_override(Overrides& ov, const std::string& key, const std::string& value) {
  ov.emplace_back(key, value);
}

// "0..4" or "0,2,7"
std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  const std::size_t dots = s.find("..");
  if (dots != std::string::npos) {
    const std::uint64_t lo = std::stoull(s.substr(0, dots));
    const std::uint64_t hi = std::stoull(s.substr(dots + 2));
    if (hi < lo) throw fedgroup::ConfigError("bad seed range '" + s + "'");
    for (std::uint64_t v = lo; v <= hi; ++v) out.push_back(v);
    return out;
  }
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoull(item));
  if (out.empty()) throw fedgroup::ConfigError("empty seed list");
  return out;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int run_one(const ExperimentConfig& cfg, bool quiet) {
  std::ofstream os(cfg.out_path);
  if (!os) throw fedgroup::IoError("cannot open output file '" + cfg.out_path + "'");
  if (!cfg.dump_data_path.empty()) {
    const fedgroup::ExperimentData data = fedgroup::prepare_data(cfg);
    std::ofstream ds(cfg.dump_data_path);
    if (!ds) throw fedgroup::IoError("cannot open dump file '" + cfg.dump_data_path + "'");
    fedgroup::dump_dataset_csv(data.train, ds);
  }
  fedgroup::CsvWriter writer(os, cfg);
  const auto result = fedgroup::run_experiment(cfg, [&](const fedgroup::RoundRecord& rec) {
    writer.write(rec);
  });
  if (!quiet) {
    const double final_acc =
        result.records.empty() ? 0.0 : result.records.back().test_accuracy;
    std::printf("%s case=%s seed=%llu rounds=%zu final_test_accuracy=%.4f -> %s\n",
                fedgroup::to_string(cfg.strategy), fedgroup::to_string(cfg.non_iid_case),
                static_cast<unsigned long long>(cfg.seed), cfg.rounds, final_acc,
                cfg.out_path.c_str());
  }
  return 0;
}

int cmd_grouping_report(const ExperimentConfig& cfg) {
  const fedgroup::ExperimentData data = fedgroup::prepare_data(cfg);
  const fedgroup::FeatureExtractor ex = fedgroup::make_extractor(cfg, data.train.input_dim);
  const bool lsh = cfg.strategy == fedgroup::Strategy::FldgL;
  const fedgroup::DeviceGroups groups = fedgroup::preprocess(
      data.devices, ex, cfg.groups,
      lsh ? fedgroup::GroupingMode::Lsh : fedgroup::GroupingMode::Plain,
      {cfg.lsh_h, cfg.lsh_r}, fedgroup::derive_seed(cfg.seed, "preprocess"));

  std::vector<int> labels;
  labels.reserve(data.devices.size());
  for (const auto& dev : data.devices) {
    labels.push_back(fedgroup::majority_label(dev, data.class_count));
  }

  std::printf("grouping mode: %s\n", lsh ? "lsh" : "plain");
  const auto members = groups.members();
  for (std::size_t g = 0; g < members.size(); ++g) {
    std::map<int, std::size_t> hist;
    for (std::size_t dev : members[g]) ++hist[labels[dev]];
    int top_label = -1;
    std::size_t top_count = 0;
    for (const auto& [label, count] : hist) {
      if (count > top_count) {
        top_count = count;
        top_label = label;
      }
    }
    std::printf("group %zu: %zu devices, majority label %d", g, members[g].size(), top_label);
    std::printf(", members:");
    for (std::size_t dev : members[g]) std::printf(" %zu", dev);
    std::printf("\n");
  }
  std::printf("purity: %.6f\n", fedgroup::purity(groups, labels));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"grouping-based federated learning simulator"};
  app.require_subcommand(1);

  std::string config_path, seed_opt, strategy_opt, case_opt, out_opt;
  std::vector<std::string> set_opts;

  auto add_common = [&](CLI::App* sub, bool with_out) {
    sub->add_option("--config", config_path, "key=value config file")->required();
    sub->add_option("--seed", seed_opt, "override the config seed");
    sub->add_option("--strategy", strategy_opt, "override the selection strategy");
    sub->add_option("--case", case_opt, "override the non-IID case");
    sub->add_option("--set", set_opts, "extra key=value overrides")->take_all();
    if (with_out) sub->add_option("--out", out_opt, "override the output CSV path");
  };

  CLI::App* run = app.add_subcommand("run", "run one experiment and write a round CSV");
  add_common(run, true);
  bool quiet = false;
  run->add_flag("--quiet", quiet, "suppress the stdout summary");

  CLI::App* sweep = app.add_subcommand("sweep", "run a strategy/case/seed grid");
  std::string strategies_opt = "fedavg,fldg", cases_opt = "case1", seeds_opt = "0..4";
  std::string out_dir = ".";
  sweep->add_option("--config", config_path, "key=value config file")->required();
  sweep->add_option("--strategies", strategies_opt, "comma list of strategies");
  sweep->add_option("--cases", cases_opt, "comma list of non-IID cases");
  sweep->add_option("--seeds", seeds_opt, "comma list or lo..hi range of seeds");
  sweep->add_option("--out-dir", out_dir, "directory for the per-run CSVs");
  sweep->add_option("--set", set_opts, "extra key=value overrides")->take_all();

  CLI::App* report = app.add_subcommand("grouping-report",
                                        "print the device groups and their label purity");
  add_common(report, false);

  CLI11_PARSE(app, argc, argv);

  try {
    Overrides ov;
    for (const std::string& kv : set_opts) {
      const std::size_t eq = kv.find('=');
      if (eq == std::string::npos) {
        throw fedgroup::ConfigError("--set expects key=value, got '" + kv + "'");
      }
      add_override(ov, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!seed_opt.empty()) add_override(ov, "seed", seed_opt);
    if (!strategy_opt.empty()) add_override(ov, "strategy", strategy_opt);
    if (!case_opt.empty()) add_override(ov, "case", case_opt);
    if (!out_opt.empty()) add_override(ov, "out", out_opt);

    if (run->parsed()) {
      return run_one(fedgroup::parse_config(config_path, ov), quiet);
    }
    if (report->parsed()) {
      return cmd_grouping_report(fedgroup::parse_config(config_path, ov));
    }

    // sweep
    const std::vector<std::string> strategies = split_commas(strategies_opt);
    const std::vector<std::string> cases = split_commas(cases_opt);
    const std::vector<std::uint64_t> seeds = parse_seed_list(seeds_opt);
    if (strategies.empty() || cases.empty()) {
      throw fedgroup::ConfigError("sweep needs at least one strategy and one case");
    }
    std::error_code dir_err;
    std::filesystem::create_directories(out_dir, dir_err);
    if (dir_err) {
      throw fedgroup::IoError("cannot create output directory '" + out_dir + "': " +
                              dir_err.message());
    }
    for (const std::string& strategy : strategies) {
      for (const std::string& cse : cases) {
        for (std::uint64_t seed : seeds) {
          Overrides combo = ov;
          add_override(combo, "strategy", strategy);
          add_override(combo, "case", cse);
          add_override(combo, "seed", std::to_string(seed));
          ExperimentConfig cfg = fedgroup::parse_config(config_path, combo);
          cfg.out_path = out_dir + "/sweep_" + fedgroup::to_string(cfg.strategy) + "_" +
                         fedgroup::to_string(cfg.non_iid_case) + "_seed" +
                         std::to_string(seed) + ".csv";
          run_one(cfg, false);
        }
      }
    }
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
