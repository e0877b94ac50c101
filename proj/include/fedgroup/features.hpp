#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fedgroup/data.hpp"
#include "fedgroup/errors.hpp"
#include "fedgroup/rng.hpp"

namespace fedgroup {

using FeatureVector = std::vector<double>;

enum class ExtractorKind { IdentityMean, RandomProjection };

inline const char* to_string(ExtractorKind k) {
  return k == ExtractorKind::IdentityMean ? "identity-mean" : "random-projection";
}

inline ExtractorKind parse_extractor_kind(const std::string& s) {
  if (s == "identity-mean" || s == "identity") return ExtractorKind::IdentityMean;
  if (s == "random-projection" || s == "projection") return ExtractorKind::RandomProjection;
  throw ConfigError("unknown extractor '" + s +
                    "' (expected identity-mean or random-projection)");
}

// The grouping signal source. identity-mean passes raw inputs through;
// random-projection applies a fixed seeded Gaussian matrix with N(0, 1/d)
// entries, which approximately preserves Euclidean distances. Either one is
// the slot where a pretrained feature network would plug in.
class FeatureExtractor {
public:
  static FeatureExtractor identity_mean(std::size_t input_dim) {
    FeatureExtractor ex;
    ex.kind_ = ExtractorKind::IdentityMean;
    ex.input_dim_ = input_dim;
    ex.output_dim_ = input_dim;
    return ex;
  }

  static FeatureExtractor random_projection(std::size_t input_dim, std::size_t output_dim,
                                            std::uint64_t seed) {
    if (input_dim < 1 || output_dim < 1) {
      throw ConfigError("random_projection: dims must be positive");
    }
    FeatureExtractor ex;
    ex.kind_ = ExtractorKind::RandomProjection;
    ex.input_dim_ = input_dim;
    ex.output_dim_ = output_dim;
    ex.seed_ = seed;
    ex.matrix_.resize(input_dim * output_dim);
    RngStream rng = RngStream::derived(seed, "projection");
    const double sd = 1.0 / std::sqrt(double(output_dim));
    for (auto& v : ex.matrix_) v = rng.normal(0.0, sd);
    return ex;
  }

  ExtractorKind kind() const { return kind_; }
  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return output_dim_; }

  FeatureVector extract(const std::vector<float>& x) const {
    if (x.size() != input_dim_) {
      throw ContractError("extract: sample dim " + std::to_string(x.size()) +
                          " != extractor input dim " + std::to_string(input_dim_));
    }
    FeatureVector out(output_dim_, 0.0);
    if (kind_ == ExtractorKind::IdentityMean) {
      for (std::size_t j = 0; j < input_dim_; ++j) out[j] = double(x[j]);
      return out;
    }
    for (std::size_t o = 0; o < output_dim_; ++o) {
      const double* row = matrix_.data() + o * input_dim_;
      double acc = 0.0;
      for (std::size_t j = 0; j < input_dim_; ++j) acc += row[j] * double(x[j]);
      out[o] = acc;
    }
    return out;
  }

private:
  ExtractorKind kind_ = ExtractorKind::IdentityMean;
  std::size_t input_dim_ = 0;
  std::size_t output_dim_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<double> matrix_;  // row-major output_dim x input_dim
};

inline FeatureVector extract(const FeatureExtractor& ex, const std::vector<float>& sample_input) {
  return ex.extract(sample_input);
}

// Arithmetic mean of the per-sample feature vectors of one device.
inline FeatureVector device_avg_feature(const FeatureExtractor& ex, const DeviceDataset& data) {
  if (data.samples.empty()) {
    throw ContractError("device_avg_feature: device " + std::to_string(data.device_id) +
                        " has no samples");
  }
  FeatureVector sum(ex.output_dim(), 0.0);
  for (const auto& s : data.samples) {
    const FeatureVector f = ex.extract(s.input);
    for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += f[j];
  }
  const double inv = 1.0 / double(data.samples.size());
  for (double& v : sum) v *= inv;
  return sum;
}

}  // namespace fedgroup
