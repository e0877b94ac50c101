#pragma once

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fedgroup/errors.hpp"
#include "fedgroup/orchestrator.hpp"

namespace fedgroup {

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] inline void bad_value(const std::string& key, const std::string& value,
                                   const std::string& expect, const std::string& where) {
  throw ConfigError("bad value '" + value + "' for key '" + key + "' (" + where +
                    "): expected " + expect);
}

inline std::size_t parse_size(const std::string& key, const std::string& value,
                              const std::string& where) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(value, &pos);
  } catch (const std::exception&) {
    bad_value(key, value, "a non-negative integer", where);
  }
  if (pos != value.size() || (!value.empty() && value[0] == '-')) {
    bad_value(key, value, "a non-negative integer", where);
  }
  return std::size_t(v);
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& value,
                               const std::string& where) {
  return std::uint64_t(parse_size(key, value, where));
}

inline double parse_real(const std::string& key, const std::string& value,
                         const std::string& where) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    bad_value(key, value, "a real number", where);
  }
  if (pos != value.size()) bad_value(key, value, "a real number", where);
  return v;
}

inline std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& value,
                                                const std::string& where) {
  std::vector<std::size_t> out;
  if (trim(value).empty()) return out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(parse_size(key, trim(item), where));
  }
  return out;
}

inline std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                               const std::string& value, const std::string& where) {
  if (key == "dataset") {
    if (value == "synthetic") {
      cfg.source = DataSource::Synthetic;
    } else if (value == "idx") {
      cfg.source = DataSource::Idx;
    } else {
      bad_value(key, value, "synthetic or idx", where);
    }
  } else if (key == "synthetic_classes") {
    cfg.synthetic_classes = parse_size(key, value, where);
  } else if (key == "synthetic_dim") {
    cfg.synthetic_dim = parse_size(key, value, where);
  } else if (key == "synthetic_train_per_class") {
    cfg.synthetic_train_per_class = parse_size(key, value, where);
  } else if (key == "synthetic_test_per_class") {
    cfg.synthetic_test_per_class = parse_size(key, value, where);
  } else if (key == "idx_train_images") {
    cfg.idx_train_images = value;
  } else if (key == "idx_train_labels") {
    cfg.idx_train_labels = value;
  } else if (key == "idx_test_images") {
    cfg.idx_test_images = value;
  } else if (key == "idx_test_labels") {
    cfg.idx_test_labels = value;
  } else if (key == "hidden") {
    cfg.hidden = parse_size_list(key, value, where);
  } else if (key == "n_devices") {
    cfg.n_devices = parse_size(key, value, where);
  } else if (key == "per_device") {
    cfg.per_device = parse_size(key, value, where);
  } else if (key == "groups") {
    cfg.groups = parse_size(key, value, where);
  } else if (key == "rounds") {
    cfg.rounds = parse_size(key, value, where);
  } else if (key == "epochs") {
    cfg.epochs = parse_size(key, value, where);
  } else if (key == "batch_size") {
    cfg.batch_size = parse_size(key, value, where);
  } else if (key == "lr") {
    cfg.lr = parse_real(key, value, where);
  } else if (key == "case") {
    try {
      cfg.non_iid_case = parse_non_iid_case(value);
    } catch (const ConfigError&) {
      bad_value(key, value, "case1..case4 or iid", where);
    }
  } else if (key == "strategy") {
    try {
      cfg.strategy = parse_strategy(value);
    } catch (const ConfigError&) {
      bad_value(key, value, "fedavg, fldg, fldg-l or k-center", where);
    }
  } else if (key == "extractor") {
    try {
      cfg.extractor = parse_extractor_kind(value);
    } catch (const ConfigError&) {
      bad_value(key, value, "identity-mean or random-projection", where);
    }
  } else if (key == "extractor_dim") {
    cfg.extractor_dim = parse_size(key, value, where);
  } else if (key == "lsh_h") {
    cfg.lsh_h = parse_size(key, value, where);
  } else if (key == "lsh_r") {
    cfg.lsh_r = parse_real(key, value, where);
  } else if (key == "recluster_period") {
    cfg.recluster_period = parse_size(key, value, where);
  } else if (key == "seed") {
    cfg.seed = parse_u64(key, value, where);
  } else if (key == "out") {
    cfg.out_path = value;
  } else if (key == "dump_data") {
    cfg.dump_data_path = value;
  } else {
    throw ConfigError("unknown config key '" + key + "' (" + where + ")");
  }
}

}  // namespace detail

// Rejects configs that cannot describe a runnable experiment. Bounds that
// depend on run-time state (dataset capacity, the LSH family-size floor) are
// checked where that state exists.
inline void validate_config(const ExperimentConfig& cfg) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("config: " + msg);
  };
  require(cfg.n_devices >= 1, "n_devices must be at least 1");
  require(cfg.groups >= 1, "groups must be at least 1");
  require(cfg.groups <= cfg.n_devices, "groups must not exceed n_devices");
  require(cfg.per_device >= 1, "per_device must be at least 1");
  require(cfg.epochs >= 1, "epochs must be at least 1");
  require(cfg.batch_size >= 1, "batch_size must be at least 1");
  require(cfg.lr > 0.0, "lr must be positive");
  require(cfg.lsh_h >= 1, "lsh_h must be at least 1");
  require(cfg.lsh_r > 0.0, "lsh_r must be positive");
  require(cfg.recluster_period >= 1, "recluster_period must be at least 1");
  require(cfg.extractor != ExtractorKind::RandomProjection || cfg.extractor_dim >= 1,
          "extractor_dim must be at least 1");
  if (cfg.source == DataSource::Synthetic) {
    require(cfg.synthetic_classes >= 2, "synthetic_classes must be at least 2");
    require(cfg.synthetic_dim >= 1, "synthetic_dim must be at least 1");
    require(cfg.synthetic_train_per_class >= 1, "synthetic_train_per_class must be at least 1");
    require(cfg.synthetic_test_per_class >= 1, "synthetic_test_per_class must be at least 1");
  } else {
    require(!cfg.idx_train_images.empty(), "idx_train_images is required for dataset=idx");
    require(!cfg.idx_train_labels.empty(), "idx_train_labels is required for dataset=idx");
    require(!cfg.idx_test_images.empty(), "idx_test_images is required for dataset=idx");
    require(!cfg.idx_test_labels.empty(), "idx_test_labels is required for dataset=idx");
  }
}

// Parses a key=value config file ('#' starts a comment line). Overrides are
// applied after the file, in order, and use the same keys as the file.
inline ExperimentConfig parse_config(
    const std::string& path,
    const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");

  ExperimentConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected key=value at " + path + ":" + std::to_string(lineno));
    }
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string value = detail::trim(t.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("empty key at " + path + ":" + std::to_string(lineno));
    }
    detail::apply_config_entry(cfg, key, value, path + ":" + std::to_string(lineno));
  }
  for (const auto& [key, value] : overrides) {
    detail::apply_config_entry(cfg, key, value, "command line");
  }
  validate_config(cfg);
  return cfg;
}

// One-line canonical form, also used as the config comment in result CSVs.
// parse of serialize round-trips every field.
inline std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "dataset=" << (cfg.source == DataSource::Synthetic ? "synthetic" : "idx");
  if (cfg.source == DataSource::Synthetic) {
    os << " synthetic_classes=" << cfg.synthetic_classes
       << " synthetic_dim=" << cfg.synthetic_dim
       << " synthetic_train_per_class=" << cfg.synthetic_train_per_class
       << " synthetic_test_per_class=" << cfg.synthetic_test_per_class;
  } else {
    os << " idx_train_images=" << cfg.idx_train_images
       << " idx_train_labels=" << cfg.idx_train_labels
       << " idx_test_images=" << cfg.idx_test_images
       << " idx_test_labels=" << cfg.idx_test_labels;
  }
  os << " hidden=";
  for (std::size_t i = 0; i < cfg.hidden.size(); ++i) {
    if (i > 0) os << ',';
    os << cfg.hidden[i];
  }
  os << " n_devices=" << cfg.n_devices << " per_device=" << cfg.per_device
     << " groups=" << cfg.groups << " rounds=" << cfg.rounds << " epochs=" << cfg.epochs
     << " batch_size=" << cfg.batch_size << " lr=" << detail::format_real(cfg.lr)
     << " case=" << to_string(cfg.non_iid_case) << " strategy=" << to_string(cfg.strategy)
     << " extractor=" << to_string(cfg.extractor) << " extractor_dim=" << cfg.extractor_dim
     << " lsh_h=" << cfg.lsh_h << " lsh_r=" << detail::format_real(cfg.lsh_r)
     << " recluster_period=" << cfg.recluster_period << " seed=" << cfg.seed;
  return os.str();
}

// Parses the output of serialize_config (space-separated key=value tokens).
inline ExperimentConfig parse_config_line(const std::string& line) {
  ExperimentConfig cfg;
  std::stringstream ss(line);
  std::string tok;
  while (ss >> tok) {
    const std::size_t eq = tok.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value token '" + tok + "'");
    detail::apply_config_entry(cfg, tok.substr(0, eq), tok.substr(eq + 1), "config line");
  }
  validate_config(cfg);
  return cfg;
}

}  // namespace fedgroup
