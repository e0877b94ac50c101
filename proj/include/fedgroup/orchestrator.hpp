#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "fedgroup/clustering.hpp"
#include "fedgroup/data.hpp"
#include "fedgroup/errors.hpp"
#include "fedgroup/features.hpp"
#include "fedgroup/lsh.hpp"
#include "fedgroup/nn.hpp"
#include "fedgroup/parallel.hpp"
#include "fedgroup/rng.hpp"

namespace fedgroup {

enum class Strategy { FedAvg, Fldg, FldgL, KCenter };

inline const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::FedAvg: return "fedavg";
    case Strategy::Fldg: return "fldg";
    case Strategy::FldgL: return "fldg-l";
    case Strategy::KCenter: return "k-center";
  }
  return "?";
}

inline Strategy parse_strategy(const std::string& s) {
  if (s == "fedavg" || s == "fedavg-random") return Strategy::FedAvg;
  if (s == "fldg") return Strategy::Fldg;
  if (s == "fldg-l" || s == "fldgl") return Strategy::FldgL;
  if (s == "k-center" || s == "kcenter") return Strategy::KCenter;
  throw ConfigError("unknown strategy '" + s + "' (expected fedavg, fldg, fldg-l or k-center)");
}

struct RoundRecord {
  std::size_t round = 0;
  std::vector<std::size_t> selected;  // sorted device indices, always K of them
  double test_accuracy = 0.0;
  double test_loss = 0.0;
  std::uint64_t uplink_bytes = 0;
  std::uint64_t downlink_bytes = 0;
};

// ---------------------------------------------------------------------------
// Preprocessing: device grouping on averaged features (plain) or on their
// p-stable LSH codes (lsh). Runs exactly once per experiment.

enum class GroupingMode { Plain, Lsh };

struct LshConfig {
  std::size_t h = 5;
  double r = 3.0;
};

inline std::vector<FeatureVector> device_features(const std::vector<DeviceDataset>& devices,
                                                  const FeatureExtractor& ex) {
  std::vector<FeatureVector> feats(devices.size());
  parallel_for(devices.size(), [&](std::size_t i) { feats[i] = device_avg_feature(ex, devices[i]); });
  return feats;
}

inline DeviceGroups preprocess(const std::vector<DeviceDataset>& devices,
                               const FeatureExtractor& ex, std::size_t k, GroupingMode mode,
                               const LshConfig& lsh_cfg, std::uint64_t seed) {
  if (k > devices.size()) {
    throw ConfigError("preprocess: K = " + std::to_string(k) + " exceeds device count " +
                      std::to_string(devices.size()));
  }
  const std::vector<FeatureVector> feats = device_features(devices, ex);

  std::vector<std::vector<double>> points;
  if (mode == GroupingMode::Lsh) {
    const std::size_t bound = min_family_size(k, lsh_cfg.r);
    if (lsh_cfg.h < bound) {
      throw ConfigError("preprocess: family size h = " + std::to_string(lsh_cfg.h) +
                        " is below ceil(log_r K) = " + std::to_string(bound) + " for K = " +
                        std::to_string(k) + ", r = " + std::to_string(lsh_cfg.r));
    }
    const LshFamily fam = sample_family(lsh_cfg.h, ex.output_dim(), lsh_cfg.r,
                                        derive_seed(seed, "lsh"));
    std::vector<HashVector> hashes(devices.size());
    for (std::size_t i = 0; i < devices.size(); ++i) hashes[i] = hash(fam, feats[i]);
    points = to_points(hashes);
  } else {
    points = feats;
  }
  return kmeans(points, k, derive_seed(seed, "kmeans"));
}

// ---------------------------------------------------------------------------
// Per-round client selection.

struct SelectionState {
  std::size_t n_devices = 0;
  std::size_t k = 0;
  const DeviceGroups* groups = nullptr;  // fldg / fldg-l, fixed after preprocess

  // k-center baseline: reclusters on latest known local weights every
  // recluster_period rounds; untrained devices stand in with w_0.
  const std::vector<ModelWeights>* latest_weights = nullptr;
  std::size_t recluster_period = 10;
  std::uint64_t seed = 0;
  DeviceGroups kcenter_groups;
  bool reclustered_this_round = false;
};

namespace detail {

inline std::vector<std::size_t> pick_one_per_group(const DeviceGroups& groups, RngStream& rng) {
  // Draw in order of each group's lowest device id, so the picks depend on
  // the grouping as a partition, not on the clusterer's label numbering.
  auto members = groups.members();
  for (const auto& m : members) {
    if (m.empty()) throw ContractError("select: empty device group");
  }
  std::sort(members.begin(), members.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  std::vector<std::size_t> out;
  out.reserve(groups.k);
  for (const auto& m : members) out.push_back(m[rng.uniform_int(m.size())]);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

inline std::vector<std::size_t> select(Strategy strategy, std::size_t round,
                                       SelectionState& state, RngStream& rng) {
  state.reclustered_this_round = false;
  switch (strategy) {
    case Strategy::FedAvg: {
      // Uniform sample of K distinct devices (partial Fisher-Yates).
      std::vector<std::size_t> idx(state.n_devices);
      std::iota(idx.begin(), idx.end(), std::size_t(0));
      for (std::size_t i = 0; i < state.k; ++i) {
        const std::size_t j = i + rng.uniform_int(state.n_devices - i);
        std::swap(idx[i], idx[j]);
      }
      idx.resize(state.k);
      std::sort(idx.begin(), idx.end());
      return idx;
    }
    case Strategy::Fldg:
    case Strategy::FldgL: {
      if (state.groups == nullptr) throw ContractError("select: fldg needs device groups");
      return detail::pick_one_per_group(*state.groups, rng);
    }
    case Strategy::KCenter: {
      if (state.latest_weights == nullptr) {
        throw ContractError("select: k-center needs latest device weights");
      }
      if ((round - 1) % state.recluster_period == 0) {
        std::vector<std::vector<double>> points(state.n_devices);
        for (std::size_t i = 0; i < state.n_devices; ++i) {
          points[i] = (*state.latest_weights)[i].params;
        }
        state.kcenter_groups = kmeans(points, state.k, derive_seed(state.seed, "kcenter", round));
        state.reclustered_this_round = true;
      }
      return detail::pick_one_per_group(state.kcenter_groups, rng);
    }
  }
  throw ContractError("select: unknown strategy");
}

// ---------------------------------------------------------------------------
// Aggregation (weighted average of deltas, fixed device-index order).

struct DeviceUpdate {
  std::size_t device_id = 0;
  WeightDelta delta;
  std::size_t sample_count = 0;  // D^i
};

inline ModelWeights aggregate(const ModelWeights& w, const std::vector<DeviceUpdate>& updates) {
  if (updates.empty()) throw ContractError("aggregate: no updates");
  for (const auto& u : updates) {
    if (u.delta.spec != w.spec || u.delta.delta.size() != w.params.size()) {
      throw ContractError("aggregate: delta of device " + std::to_string(u.device_id) +
                          " does not match the global model shape");
    }
    if (u.sample_count == 0) {
      throw ContractError("aggregate: device " + std::to_string(u.device_id) +
                          " reports zero samples");
    }
  }

  std::vector<std::size_t> order(updates.size());
  std::iota(order.begin(), order.end(), std::size_t(0));
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return updates[a].device_id < updates[b].device_id;
  });

  const bool uniform = std::all_of(updates.begin(), updates.end(), [&](const DeviceUpdate& u) {
    return u.sample_count == updates.front().sample_count;
  });

  ModelWeights out = w;
  std::vector<double> acc(w.params.size(), 0.0);
  if (uniform) {
    // Equal sample counts reduce the weighted form to a plain mean.
    for (std::size_t o : order) {
      const auto& d = updates[o].delta.delta;
      for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += d[j];
    }
    const double inv = 1.0 / double(updates.size());
    for (std::size_t j = 0; j < acc.size(); ++j) out.params[j] += acc[j] * inv;
  } else {
    double total = 0.0;
    for (std::size_t o : order) {
      const auto& u = updates[o];
      const double weight = double(u.sample_count);
      total += weight;
      for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += weight * u.delta.delta[j];
    }
    for (std::size_t j = 0; j < acc.size(); ++j) out.params[j] += acc[j] / total;
  }
  detail::check_weights(out, "aggregate");
  return out;
}

// ---------------------------------------------------------------------------
// Experiment runner.

enum class DataSource { Synthetic, Idx };

struct ExperimentConfig {
  DataSource source = DataSource::Synthetic;
  // synthetic dataset
  std::size_t synthetic_classes = 10;
  std::size_t synthetic_dim = 32;
  std::size_t synthetic_train_per_class = 6600;
  std::size_t synthetic_test_per_class = 500;
  // idx dataset
  std::string idx_train_images, idx_train_labels, idx_test_images, idx_test_labels;

  std::vector<std::size_t> hidden = {50};

  std::size_t n_devices = 100;
  std::size_t per_device = 600;
  std::size_t groups = 10;   // K
  std::size_t rounds = 100;  // R
  std::size_t epochs = 5;    // E
  std::size_t batch_size = 50;
  double lr = 0.01;

  NonIidCase non_iid_case = NonIidCase::Case1;
  Strategy strategy = Strategy::Fldg;
  ExtractorKind extractor = ExtractorKind::IdentityMean;
  std::size_t extractor_dim = 64;

  std::size_t lsh_h = 5;
  double lsh_r = 3.0;
  std::size_t recluster_period = 10;

  std::uint64_t seed = 0;
  std::string out_path = "rounds.csv";
  std::string dump_data_path;  // optional dataset CSV dump

  bool operator==(const ExperimentConfig&) const = default;
};

struct ExperimentResult {
  std::vector<RoundRecord> records;
  ModelWeights final_weights;
  std::optional<DeviceGroups> groups;       // fldg / fldg-l only
  std::uint64_t preprocess_uplink_bytes = 0;
  std::size_t parameter_count = 0;
  std::vector<int> device_majority_labels;  // for grouping reports
};

struct ExperimentData {
  Dataset train;
  Dataset test;
  std::vector<DeviceDataset> devices;
  int class_count = 0;
};

// Builds train/test splits and the device partition for a config. Synthetic
// data generates train+test per class in one draw and splits, so both sides
// share the same class means.
inline ExperimentData prepare_data(const ExperimentConfig& cfg) {
  ExperimentData out;
  if (cfg.source == DataSource::Synthetic) {
    const std::size_t per_class = cfg.synthetic_train_per_class + cfg.synthetic_test_per_class;
    Dataset all = gen_synthetic(int(cfg.synthetic_classes), cfg.synthetic_dim, per_class,
                                derive_seed(cfg.seed, "data"));
    out.train.class_count = out.test.class_count = all.class_count;
    out.train.input_dim = out.test.input_dim = all.input_dim;
    for (std::size_t c = 0; c < cfg.synthetic_classes; ++c) {
      const std::size_t base = c * per_class;
      for (std::size_t i = 0; i < per_class; ++i) {
        auto& dst = (i < cfg.synthetic_train_per_class) ? out.train : out.test;
        dst.samples.push_back(all.samples[base + i]);
      }
    }
  } else {
    out.train = load_idx(cfg.idx_train_images, cfg.idx_train_labels);
    out.test = load_idx(cfg.idx_test_images, cfg.idx_test_labels);
    if (out.train.input_dim != out.test.input_dim) {
      throw FormatError("train/test input dimensions disagree (" +
                        std::to_string(out.train.input_dim) + " vs " +
                        std::to_string(out.test.input_dim) + ")");
    }
  }
  out.class_count = std::max(out.train.class_count, out.test.class_count);
  out.train.class_count = out.test.class_count = out.class_count;
  out.devices = partition(out.train, cfg.n_devices, cfg.per_device, cfg.non_iid_case,
                          derive_seed(cfg.seed, "partition"));
  return out;
}

inline FeatureExtractor make_extractor(const ExperimentConfig& cfg, std::size_t input_dim) {
  if (cfg.extractor == ExtractorKind::IdentityMean) {
    return FeatureExtractor::identity_mean(input_dim);
  }
  return FeatureExtractor::random_projection(input_dim, cfg.extractor_dim,
                                             derive_seed(cfg.seed, "extractor"));
}

using RoundSink = std::function<void(const RoundRecord&)>;

// The full grouping-based FL loop: optional preprocessing, then R rounds of
// select -> dispatch -> local training -> aggregate -> evaluate. Deterministic
// in cfg.seed regardless of the intra-round thread count.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       const RoundSink& sink = nullptr) {
  ExperimentData data = prepare_data(cfg);
  const std::size_t input_dim = data.train.input_dim;

  ModelSpec spec;
  spec.layer_dims.push_back(input_dim);
  for (std::size_t h : cfg.hidden) spec.layer_dims.push_back(h);
  spec.layer_dims.push_back(std::size_t(data.class_count));
  spec.validate();

  ExperimentResult result;
  result.parameter_count = param_count(spec);
  result.device_majority_labels.reserve(cfg.n_devices);
  for (const auto& dev : data.devices) {
    result.device_majority_labels.push_back(majority_label(dev, data.class_count));
  }

  const FeatureExtractor ex = make_extractor(cfg, input_dim);
  if (cfg.strategy == Strategy::Fldg || cfg.strategy == Strategy::FldgL) {
    const GroupingMode mode =
        cfg.strategy == Strategy::Fldg ? GroupingMode::Plain : GroupingMode::Lsh;
    result.groups = preprocess(data.devices, ex, cfg.groups, mode, {cfg.lsh_h, cfg.lsh_r},
                               derive_seed(cfg.seed, "preprocess"));
    const std::size_t per_device_payload =
        cfg.strategy == Strategy::Fldg ? ex.output_dim() : cfg.lsh_h;
    result.preprocess_uplink_bytes = std::uint64_t(cfg.n_devices) * per_device_payload * 8;
  }

  ModelWeights w = init_weights(spec, derive_seed(cfg.seed, "init"));
  result.final_weights = w;

  SelectionState sel_state;
  sel_state.n_devices = cfg.n_devices;
  sel_state.k = cfg.groups;
  sel_state.groups = result.groups ? &*result.groups : nullptr;
  sel_state.recluster_period = cfg.recluster_period;
  sel_state.seed = cfg.seed;
  std::vector<ModelWeights> latest;
  if (cfg.strategy == Strategy::KCenter) {
    latest.assign(cfg.n_devices, w);
    sel_state.latest_weights = &latest;
  }

  const Batch test_batch = full_batch(data.test.samples, input_dim);
  const std::uint64_t model_bytes = std::uint64_t(result.parameter_count) * 8;

  for (std::size_t t = 1; t <= cfg.rounds; ++t) {
    RngStream sel_rng = RngStream::derived(cfg.seed, "select", t);
    const std::vector<std::size_t> selected = select(cfg.strategy, t, sel_state, sel_rng);

    std::vector<DeviceUpdate> updates(selected.size());
    try {
      parallel_for(selected.size(), [&](std::size_t s) {
        const std::size_t dev = selected[s];
        RngStream local_rng = RngStream::derived(cfg.seed, "local", t, dev);
        updates[s].device_id = dev;
        updates[s].sample_count = data.devices[dev].samples.size();
        updates[s].delta =
            local_train(w, data.devices[dev], cfg.epochs, cfg.lr, cfg.batch_size, local_rng);
      });
    } catch (const NumericError& e) {
      throw NumericError("round " + std::to_string(t) + ": " + e.what());
    }

    if (cfg.strategy == Strategy::KCenter) {
      for (const auto& u : updates) {
        ModelWeights local = w;
        for (std::size_t j = 0; j < local.params.size(); ++j) {
          local.params[j] += u.delta.delta[j];
        }
        latest[u.device_id] = std::move(local);
      }
    }

    w = aggregate(w, updates);

    RoundRecord rec;
    rec.round = t;
    rec.selected = selected;
    const LossStats eval = forward_loss(w, test_batch);
    rec.test_accuracy = eval.accuracy;
    rec.test_loss = eval.loss;
    rec.uplink_bytes = std::uint64_t(selected.size()) * model_bytes;
    if (sel_state.reclustered_this_round) {
      // recluster rounds also carry every device's current weights upstream
      rec.uplink_bytes += std::uint64_t(cfg.n_devices) * model_bytes;
    }
    rec.downlink_bytes = std::uint64_t(selected.size()) * model_bytes;
    if (sink) sink(rec);
    result.records.push_back(std::move(rec));
  }

  result.final_weights = std::move(w);
  return result;
}

}  // namespace fedgroup
