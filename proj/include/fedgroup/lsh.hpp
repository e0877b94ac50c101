#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fedgroup/errors.hpp"
#include "fedgroup/features.hpp"
#include "fedgroup/rng.hpp"

namespace fedgroup {

// 2-stable (Gaussian) locality-sensitive hashing of feature vectors:
// h(v) = floor((a.v + b) / r), a ~ N(0, I), b ~ U[0, r]. Collision
// probability decays with the Euclidean distance between inputs, which is
// what the device grouping relies on.

struct LshFunction {
  std::vector<double> a;
  double b = 0.0;
  double r = 1.0;
};

struct LshFamily {
  std::vector<LshFunction> functions;
  std::uint64_t seed = 0;

  std::size_t size() const { return functions.size(); }
  std::size_t dim() const { return functions.empty() ? 0 : functions.front().a.size(); }
  double window() const { return functions.empty() ? 0.0 : functions.front().r; }
};

using HashVector = std::vector<std::int64_t>;

// Smallest family size that can still tell K groups apart, enforced as the
// ceil(log_r K) bound. Only meaningful for r > 1; smaller windows place no
// constraint beyond h >= 1.
inline std::size_t min_family_size(std::size_t k_groups, double r) {
  if (k_groups <= 1 || r <= 1.0) return 1;
  const double raw = std::log(double(k_groups)) / std::log(r);
  return std::size_t(std::max(1.0, std::ceil(raw - 1e-9)));
}

inline LshFamily sample_family(std::size_t h, std::size_t d, double r, std::uint64_t seed) {
  if (h < 1 || d < 1) throw ConfigError("sample_family: h and d must be >= 1");
  if (!(r > 0.0)) throw ConfigError("sample_family: window size r must be positive");
  LshFamily fam;
  fam.seed = seed;
  fam.functions.resize(h);
  RngStream rng = RngStream::derived(seed, "lsh-family");
  for (auto& fn : fam.functions) {
    fn.r = r;
    fn.a.resize(d);
    for (auto& v : fn.a) v = rng.normal();
    fn.b = rng.uniform(0.0, r);
  }
  return fam;
}

inline std::int64_t hash_one(const LshFunction& fn, const FeatureVector& v) {
  if (v.size() != fn.a.size()) {
    throw ContractError("hash: vector dim " + std::to_string(v.size()) +
                        " != family dim " + std::to_string(fn.a.size()));
  }
  double dot = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) dot += fn.a[j] * v[j];
  const double val = std::floor((dot + fn.b) / fn.r);
  // int64 holds |values| below 2^63; anything near that is a runaway input.
  if (!(val >= -9.0e18 && val <= 9.0e18)) {
    throw NumericError("hash: value " + std::to_string(val) + " overflows 64-bit bucket index");
  }
  return std::int64_t(val);
}

inline HashVector hash(const LshFamily& fam, const FeatureVector& v) {
  HashVector out(fam.size());
  for (std::size_t j = 0; j < fam.size(); ++j) out[j] = hash_one(fam.functions[j], v);
  return out;
}

// Empirical Pr[h(x)=h(y)] at a fixed Euclidean distance: every trial draws a
// fresh single function, a random base point and a random direction.
inline double collision_rate(std::size_t d, double r, double distance, std::size_t trials,
                             std::uint64_t seed) {
  if (d < 1 || trials < 1) throw ContractError("collision_rate: d and trials must be >= 1");
  if (!(r > 0.0) || !(distance >= 0.0)) {
    throw ContractError("collision_rate: need r > 0 and distance >= 0");
  }
  RngStream rng = RngStream::derived(seed, "collision");
  std::size_t hits = 0;
  std::vector<double> a(d), x(d), u(d);
  for (std::size_t t = 0; t < trials; ++t) {
    for (auto& v : a) v = rng.normal();
    const double b = rng.uniform(0.0, r);
    double norm2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      x[j] = rng.normal();
      u[j] = rng.normal();
      norm2 += u[j] * u[j];
    }
    const double inv_norm = 1.0 / std::sqrt(norm2);
    double dot_x = 0.0, dot_y = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double y = x[j] + distance * (u[j] * inv_norm);
      dot_x += a[j] * x[j];
      dot_y += a[j] * y;
    }
    if (std::floor((dot_x + b) / r) == std::floor((dot_y + b) / r)) ++hits;
  }
  return double(hits) / double(trials);
}

// Flat text form, one line per function: r, b, then the a-entries. This is
// the payload devices would download before hashing locally.
inline void save_family(const LshFamily& fam, std::ostream& out) {
  char buf[40];
  for (const auto& fn : fam.functions) {
    std::snprintf(buf, sizeof(buf), "%.17g", fn.r);
    out << buf;
    std::snprintf(buf, sizeof(buf), "%.17g", fn.b);
    out << ' ' << buf;
    for (double v : fn.a) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ' ' << buf;
    }
    out << '\n';
  }
}

inline LshFamily load_family(std::istream& in) {
  LshFamily fam;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    LshFunction fn;
    if (!(ls >> fn.r >> fn.b)) {
      throw FormatError("lsh family line " + std::to_string(line_no) + ": expected r and b");
    }
    double v;
    while (ls >> v) fn.a.push_back(v);
    if (!ls.eof()) {
      throw FormatError("lsh family line " + std::to_string(line_no) + ": trailing garbage");
    }
    if (!(fn.r > 0.0) || fn.b < 0.0 || fn.b > fn.r || fn.a.empty()) {
      throw FormatError("lsh family line " + std::to_string(line_no) +
                        ": need r > 0, 0 <= b <= r and at least one a-entry");
    }
    fam.functions.push_back(std::move(fn));
  }
  if (fam.functions.empty()) throw FormatError("lsh family: no functions found");
  const double r = fam.functions.front().r;
  const std::size_t d = fam.functions.front().a.size();
  for (const auto& fn : fam.functions) {
    if (fn.r != r || fn.a.size() != d) {
      throw FormatError("lsh family: functions disagree on window or dimension");
    }
  }
  return fam;
}

}  // namespace fedgroup
