// Runs one small synthetic experiment per strategy and prints the last round.

#include <cstdio>

#include "fedgroup/fedgroup.hpp"

int main() {
  using namespace fedgroup;

  ExperimentConfig cfg;
  cfg.synthetic_classes = 5;
  cfg.synthetic_dim = 8;
  cfg.synthetic_train_per_class = 200;
  cfg.synthetic_test_per_class = 60;
  cfg.hidden = {16};
  cfg.n_devices = 15;
  cfg.per_device = 50;
  cfg.groups = 5;
  cfg.rounds = 20;
  cfg.epochs = 2;
  cfg.batch_size = 25;
  cfg.lr = 0.05;
  cfg.non_iid_case = NonIidCase::Case1;
  cfg.seed = 1;

  std::printf("%-10s %-8s %-10s %-10s %s\n", "strategy", "rounds", "accuracy", "loss",
              "uplink_bytes");
  for (const Strategy s :
       {Strategy::FedAvg, Strategy::Fldg, Strategy::FldgL, Strategy::KCenter}) {
    cfg.strategy = s;
    const ExperimentResult res = run_experiment(cfg);
    std::uint64_t uplink = res.preprocess_uplink_bytes;
    for (const auto& rec : res.records) uplink += rec.uplink_bytes;
    const RoundRecord& last = res.records.back();
    std::printf("%-10s %-8zu %-10.4f %-10.4f %llu\n", to_string(s), last.round,
                last.test_accuracy, last.test_loss, static_cast<unsigned long long>(uplink));
  }
  return 0;
}
