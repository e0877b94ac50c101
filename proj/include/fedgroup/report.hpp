#pragma once

#include <cstdio>
#include <ostream>
#include <string>

#include "fedgroup/config.hpp"
#include "fedgroup/orchestrator.hpp"

namespace fedgroup {

inline constexpr const char* kCsvHeader =
    "round,strategy,case,selected_count,test_accuracy,test_loss,uplink_bytes,downlink_bytes";

// Streams experiment rounds as CSV. The first line pins the full experiment
// config as a comment so a result file is self-describing; doubles use %.17g
// so reruns can be compared byte for byte.
class CsvWriter {
 public:
  CsvWriter(std::ostream& os, const ExperimentConfig& cfg) : os_(os), cfg_(cfg) {
    os_ << "# config: " << serialize_config(cfg) << '\n';
    os_ << kCsvHeader << '\n';
    os_.flush();
  }

  void write(const RoundRecord& rec) {
    os_ << rec.round << ',' << to_string(cfg_.strategy) << ',' << to_string(cfg_.non_iid_case)
        << ',' << rec.selected.size() << ',' << detail::format_real(rec.test_accuracy) << ','
        << detail::format_real(rec.test_loss) << ',' << rec.uplink_bytes << ','
        << rec.downlink_bytes << '\n';
    os_.flush();
  }

 private:
  std::ostream& os_;
  ExperimentConfig cfg_;
};

}  // namespace fedgroup
