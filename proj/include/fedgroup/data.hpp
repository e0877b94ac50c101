#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "fedgroup/errors.hpp"
#include "fedgroup/rng.hpp"

namespace fedgroup {

struct Sample {
  std::vector<float> input;
  int label = 0;
};

struct Dataset {
  std::vector<Sample> samples;
  int class_count = 0;
  std::size_t input_dim = 0;
};

// One device's local shard. |samples| is the D^i that weights aggregation.
struct DeviceDataset {
  std::size_t device_id = 0;
  std::vector<Sample> samples;
};

enum class NonIidCase { Case1, Case2, Case3, Case4, Iid };

inline const char* to_string(NonIidCase c) {
  switch (c) {
    case NonIidCase::Case1: return "case1";
    case NonIidCase::Case2: return "case2";
    case NonIidCase::Case3: return "case3";
    case NonIidCase::Case4: return "case4";
    case NonIidCase::Iid: return "iid";
  }
  return "?";
}

inline NonIidCase parse_non_iid_case(const std::string& s) {
  if (s == "case1" || s == "1") return NonIidCase::Case1;
  if (s == "case2" || s == "2") return NonIidCase::Case2;
  if (s == "case3" || s == "3") return NonIidCase::Case3;
  if (s == "case4" || s == "4") return NonIidCase::Case4;
  if (s == "iid") return NonIidCase::Iid;
  throw ConfigError("unknown non-IID case '" + s + "' (expected case1..case4 or iid)");
}

// ---------------------------------------------------------------------------
// IDX loading (MNIST / Fashion-MNIST container format, big-endian)

namespace detail {

inline std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>());
}

inline std::uint32_t read_u32_be(const std::vector<unsigned char>& buf, std::size_t offset,
                                 const std::string& path) {
  if (offset + 4 > buf.size()) {
    throw FormatError("'" + path + "' truncated: need 4 bytes at byte offset " +
                      std::to_string(offset) + ", file has " + std::to_string(buf.size()));
  }
  return (std::uint32_t(buf[offset]) << 24) | (std::uint32_t(buf[offset + 1]) << 16) |
         (std::uint32_t(buf[offset + 2]) << 8) | std::uint32_t(buf[offset + 3]);
}

}  // namespace detail

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

// Decodes an IDX image/label file pair. Pixels are scaled to [0,1] and
// flattened row-major.
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  const auto img = detail::read_file(images_path);
  const auto lab = detail::read_file(labels_path);

  const std::uint32_t img_magic = detail::read_u32_be(img, 0, images_path);
  if (img_magic != kIdxImagesMagic) {
    throw FormatError("'" + images_path + "': bad images magic at byte offset 0 (got " +
                      std::to_string(img_magic) + ", want 2051)");
  }
  const std::uint32_t lab_magic = detail::read_u32_be(lab, 0, labels_path);
  if (lab_magic != kIdxLabelsMagic) {
    throw FormatError("'" + labels_path + "': bad labels magic at byte offset 0 (got " +
                      std::to_string(lab_magic) + ", want 2049)");
  }

  const std::uint32_t img_count = detail::read_u32_be(img, 4, images_path);
  const std::uint32_t rows = detail::read_u32_be(img, 8, images_path);
  const std::uint32_t cols = detail::read_u32_be(img, 12, images_path);
  const std::uint32_t lab_count = detail::read_u32_be(lab, 4, labels_path);
  if (img_count != lab_count) {
    throw FormatError("image count " + std::to_string(img_count) + " != label count " +
                      std::to_string(lab_count) + " ('" + images_path + "' vs '" + labels_path +
                      "')");
  }

  const std::size_t dim = std::size_t(rows) * cols;
  const std::size_t img_need = 16 + std::size_t(img_count) * dim;
  if (img.size() < img_need) {
    throw FormatError("'" + images_path + "' truncated at byte offset " +
                      std::to_string(img.size()) + " (need " + std::to_string(img_need) + ")");
  }
  const std::size_t lab_need = 8 + std::size_t(lab_count);
  if (lab.size() < lab_need) {
    throw FormatError("'" + labels_path + "' truncated at byte offset " +
                      std::to_string(lab.size()) + " (need " + std::to_string(lab_need) + ")");
  }

  Dataset ds;
  ds.input_dim = dim;
  ds.samples.resize(img_count);
  int max_label = 0;
  for (std::uint32_t i = 0; i < img_count; ++i) {
    Sample& s = ds.samples[i];
    s.label = int(lab[8 + i]);
    max_label = std::max(max_label, s.label);
    s.input.resize(dim);
    const unsigned char* px = img.data() + 16 + std::size_t(i) * dim;
    for (std::size_t j = 0; j < dim; ++j) s.input[j] = float(px[j]) / 255.0f;
  }
  ds.class_count = max_label + 1;
  return ds;
}

// ---------------------------------------------------------------------------
// Synthetic data: Gaussian class clusters with means kept >= 4 sigma apart,
// so a linear model separates them and nearest-centroid is a usable oracle.

constexpr double kSyntheticSigma = 1.0;
constexpr double kSyntheticMinSeparation = 4.0 * kSyntheticSigma;

inline Dataset gen_synthetic(int class_count, std::size_t input_dim, std::size_t per_class,
                             std::uint64_t seed) {
  if (class_count < 1 || input_dim < 1 || per_class < 1) {
    throw ContractError("gen_synthetic: class_count, input_dim and per_class must be positive");
  }

  RngStream mean_rng = RngStream::derived(seed, "means");
  std::vector<std::vector<double>> means;
  double side = 10.0;
  while (true) {
    means.clear();
    bool ok = true;
    for (int c = 0; c < class_count && ok; ++c) {
      int attempts = 0;
      while (true) {
        std::vector<double> mu(input_dim);
        for (auto& v : mu) v = mean_rng.uniform(0.0, side);
        bool far_enough = true;
        for (const auto& other : means) {
          double d2 = 0.0;
          for (std::size_t j = 0; j < input_dim; ++j) {
            const double diff = mu[j] - other[j];
            d2 += diff * diff;
          }
          if (d2 < kSyntheticMinSeparation * kSyntheticMinSeparation) {
            far_enough = false;
            break;
          }
        }
        if (far_enough) {
          means.push_back(std::move(mu));
          break;
        }
        if (++attempts >= 1000) {
          ok = false;  // box too crowded, grow and redo all means
          break;
        }
      }
    }
    if (ok) break;
    side *= 2.0;
  }

  RngStream sample_rng = RngStream::derived(seed, "samples");
  Dataset ds;
  ds.class_count = class_count;
  ds.input_dim = input_dim;
  ds.samples.reserve(std::size_t(class_count) * per_class);
  for (int c = 0; c < class_count; ++c) {
    for (std::size_t k = 0; k < per_class; ++k) {
      Sample s;
      s.label = c;
      s.input.resize(input_dim);
      for (std::size_t j = 0; j < input_dim; ++j) {
        s.input[j] = float(means[c][j] + kSyntheticSigma * sample_rng.normal());
      }
      ds.samples.push_back(std::move(s));
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Non-IID partitioner (the four Table-style cases plus iid). Devices draw
// without replacement from shared per-class pools, so no sample lands on two
// devices. Device i's dominant label is i mod class_count.

namespace detail {

inline std::size_t pop_from_pool(std::vector<std::vector<std::size_t>>& pools, int label,
                                 std::size_t device, std::size_t still_needed) {
  auto& pool = pools[std::size_t(label)];
  if (pool.empty()) {
    throw CapacityError("partition: class " + std::to_string(label) +
                        " exhausted while filling device " + std::to_string(device) +
                        " (short by " + std::to_string(still_needed) + " samples)");
  }
  const std::size_t idx = pool.back();
  pool.pop_back();
  return idx;
}

}  // namespace detail

inline std::vector<DeviceDataset> partition(const Dataset& ds, std::size_t n_devices,
                                            std::size_t per_device, NonIidCase c,
                                            std::uint64_t seed) {
  if (n_devices < 1 || per_device < 1) {
    throw ContractError("partition: n_devices and per_device must be positive");
  }
  const int C = ds.class_count;
  if (C < 2) throw ContractError("partition: dataset needs at least 2 classes");
  if (n_devices * per_device > ds.samples.size()) {
    throw CapacityError("partition: need " + std::to_string(n_devices * per_device) +
                        " samples but dataset holds " + std::to_string(ds.samples.size()));
  }
  if (c == NonIidCase::Case2 && per_device % 2 != 0) {
    throw ContractError("partition: case2 requires an even per_device, got " +
                        std::to_string(per_device));
  }

  std::vector<std::vector<std::size_t>> pools(static_cast<std::size_t>(C));
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    pools[std::size_t(ds.samples[i].label)].push_back(i);
  }
  RngStream pool_rng = RngStream::derived(seed, "pools");
  for (auto& pool : pools) pool_rng.shuffle(pool);
  RngStream label_rng = RngStream::derived(seed, "labels");

  // Number of dominant-label samples per case; the remainder is drawn
  // uniformly over the other labels (all labels for iid).
  const auto dominant_count = [&](NonIidCase cc) -> std::size_t {
    switch (cc) {
      case NonIidCase::Case1: return per_device;
      case NonIidCase::Case2: return per_device / 2;
      case NonIidCase::Case3: return (per_device * 4 + 4) / 5;  // ceil(0.8 n)
      case NonIidCase::Case4: return (per_device + 1) / 2;      // ceil(0.5 n)
      case NonIidCase::Iid: return 0;
    }
    return 0;
  };

  std::vector<DeviceDataset> devices(n_devices);
  for (std::size_t i = 0; i < n_devices; ++i) {
    DeviceDataset& dev = devices[i];
    dev.device_id = i;
    dev.samples.reserve(per_device);
    const int dominant = int(i % std::size_t(C));
    const std::size_t dom_n = dominant_count(c);

    for (std::size_t k = 0; k < dom_n; ++k) {
      dev.samples.push_back(ds.samples[detail::pop_from_pool(pools, dominant, i, dom_n - k)]);
    }
    for (std::size_t k = dom_n; k < per_device; ++k) {
      int label;
      if (c == NonIidCase::Iid) {
        label = int(label_rng.uniform_int(std::uint64_t(C)));
      } else if (c == NonIidCase::Case2) {
        label = int((i + 1) % std::size_t(C));
      } else {
        // uniform over the C-1 non-dominant labels
        int pick = int(label_rng.uniform_int(std::uint64_t(C - 1)));
        label = pick >= dominant ? pick + 1 : pick;
      }
      dev.samples.push_back(ds.samples[detail::pop_from_pool(pools, label, i, 1)]);
    }
  }
  return devices;
}

// Most frequent label on a device, ties toward the lowest label. For the
// four skewed cases this recovers the dominant label by construction.
inline int majority_label(const DeviceDataset& dev, int class_count) {
  std::vector<std::size_t> hist(std::size_t(class_count), 0);
  for (const auto& s : dev.samples) ++hist[std::size_t(s.label)];
  return int(std::max_element(hist.begin(), hist.end()) - hist.begin());
}

// Inspection dump: header then one `label,pixel0,...` row per sample.
inline void dump_dataset_csv(const Dataset& ds, std::ostream& out) {
  out << "label";
  for (std::size_t j = 0; j < ds.input_dim; ++j) out << ",pixel" << j;
  out << "\n";
  char buf[32];
  for (const auto& s : ds.samples) {
    out << s.label;
    for (float v : s.input) {
      std::snprintf(buf, sizeof(buf), "%.9g", double(v));
      out << ',' << buf;
    }
    out << "\n";
  }
}

}  // namespace fedgroup
