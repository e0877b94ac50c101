#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "fedgroup/fedgroup.hpp"

namespace testutil {

inline std::string temp_dir() {
  static const std::string dir = [] {
    std::string d = "/tmp/fedgroup_tests_" + std::to_string(::getpid());
    if (std::system(("mkdir -p " + d).c_str()) != 0) throw std::runtime_error("mkdir failed: " + d);
    return d;
  }();
  return dir;
}

inline std::string temp_path(const std::string& name) { return temp_dir() + "/" + name; }

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  os << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

inline CommandResult run_command(const std::string& cmd) {
  CommandResult res;
  FILE* pipe = ::popen((cmd + " 2>&1").c_str(), "r");
  if (!pipe) return res;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = ::fread(buf.data(), 1, buf.size(), pipe)) > 0) {
    res.output.append(buf.data(), n);
  }
  const int status = ::pclose(pipe);
  res.exit_code = (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
  return res;
}

// Big-endian u32 bytes, for building IDX fixtures.
inline void push_u32_be(std::string& buf, std::uint32_t v) {
  buf.push_back(char((v >> 24) & 0xff));
  buf.push_back(char((v >> 16) & 0xff));
  buf.push_back(char((v >> 8) & 0xff));
  buf.push_back(char(v & 0xff));
}

// A 2-class, low-dimension dataset with tight, well separated clusters.
inline fedgroup::Dataset tiny_dataset(std::size_t per_class = 8) {
  return fedgroup::gen_synthetic(2, 4, per_class, 7);
}

inline fedgroup::DeviceDataset device_from(std::vector<fedgroup::Sample> samples,
                                           std::size_t id = 0) {
  fedgroup::DeviceDataset d;
  d.device_id = id;
  d.samples = std::move(samples);
  return d;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace testutil
