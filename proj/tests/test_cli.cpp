#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "helpers.hpp"

namespace {

const std::string kCli = FEDGROUP_CLI_PATH;

std::string small_config_file(const std::string& name) {
  const std::string path = testutil::temp_path(name);
  testutil::write_file(path,
                       "synthetic_classes=3\n"
                       "synthetic_dim=6\n"
                       "synthetic_train_per_class=150\n"
                       "synthetic_test_per_class=40\n"
                       "hidden=8\n"
                       "n_devices=9\n"
                       "per_device=30\n"
                       "groups=3\n"
                       "rounds=5\n"
                       "epochs=1\n"
                       "batch_size=10\n"
                       "lr=0.05\n"
                       "case=case1\n"
                       "strategy=fldg\n"
                       "seed=3\n");
  return path;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("run writes a well-formed round CSV and a summary") {
  const std::string cfg = small_config_file("cli_run.cfg");
  const std::string out = testutil::temp_path("cli_run.csv");

  const auto res = testutil::run_command(kCli + " run --config " + cfg + " --out " + out);
  REQUIRE(res.exit_code == 0);
  CHECK(res.output.find("final_test_accuracy=") != std::string::npos);

  const auto lines = lines_of(testutil::read_file(out));
  REQUIRE(lines.size() == 2 + 5);  // config comment, header, five rounds
  CHECK(lines[0].rfind("# config: ", 0) == 0);
  CHECK(lines[1] == fedgroup::kCsvHeader);
  for (std::size_t i = 2; i < lines.size(); ++i) {
    const auto cols = [&] {
      std::vector<std::string> c;
      std::istringstream is(lines[i]);
      std::string tok;
      while (std::getline(is, tok, ',')) c.push_back(tok);
      return c;
    }();
    REQUIRE(cols.size() == 8);
    CHECK(cols[0] == std::to_string(i - 1));
    CHECK(cols[1] == "fldg");
    CHECK(cols[2] == "case1");
    CHECK(cols[3] == "3");
  }

  // the config comment round-trips through the parser
  const std::string comment = lines[0].substr(std::string("# config: ").size());
  const fedgroup::ExperimentConfig parsed = fedgroup::parse_config_line(comment);
  CHECK(parsed.n_devices == 9);
  CHECK(parsed.strategy == fedgroup::Strategy::Fldg);
}

TEST_CASE("reruns are byte-identical, whatever the thread count") {
  const std::string cfg = small_config_file("cli_det.cfg");
  const std::string out1 = testutil::temp_path("cli_det1.csv");
  const std::string out2 = testutil::temp_path("cli_det2.csv");
  const std::string out3 = testutil::temp_path("cli_det3.csv");

  REQUIRE(testutil::run_command(kCli + " run --config " + cfg + " --out " + out1).exit_code == 0);
  REQUIRE(testutil::run_command(kCli + " run --config " + cfg + " --out " + out2).exit_code == 0);
  REQUIRE(testutil::run_command("FEDGROUP_THREADS=3 " + kCli + " run --config " + cfg +
                                " --out " + out3)
              .exit_code == 0);

  const std::string base = testutil::read_file(out1);
  CHECK(base == testutil::read_file(out2));
  CHECK(base == testutil::read_file(out3));
  CHECK(!base.empty());
}

TEST_CASE("flag overrides land in the output") {
  const std::string cfg = small_config_file("cli_ovr.cfg");
  const std::string out = testutil::temp_path("cli_ovr.csv");

  const auto res = testutil::run_command(kCli + " run --config " + cfg +
                                         " --strategy fedavg --case iid --seed 8 --out " + out);
  REQUIRE(res.exit_code == 0);
  const auto lines = lines_of(testutil::read_file(out));
  REQUIRE(lines.size() >= 3);
  CHECK(lines[0].find("strategy=fedavg") != std::string::npos);
  CHECK(lines[0].find("case=iid") != std::string::npos);
  CHECK(lines[0].find("seed=8") != std::string::npos);

  const auto res2 = testutil::run_command(kCli + " run --config " + cfg +
                                          " --set rounds=2 epochs=2 --out " + out);
  REQUIRE(res2.exit_code == 0);
  CHECK(lines_of(testutil::read_file(out)).size() == 2 + 2);
}

TEST_CASE("sweep writes one csv per strategy/case/seed combination") {
  const std::string cfg = small_config_file("cli_sweep.cfg");
  const std::string dir = testutil::temp_path("sweepdir");
  REQUIRE(std::system(("mkdir -p " + dir).c_str()) == 0);

  const auto res = testutil::run_command(kCli + " sweep --config " + cfg +
                                         " --strategies fedavg,fldg --cases case1 --seeds 0..1" +
                                         " --set rounds=2 --out-dir " + dir);
  REQUIRE(res.exit_code == 0);
  for (const std::string name :
       {"sweep_fedavg_case1_seed0.csv", "sweep_fedavg_case1_seed1.csv",
        "sweep_fldg_case1_seed0.csv", "sweep_fldg_case1_seed1.csv"}) {
    const std::string content = testutil::read_file(dir + "/" + name);
    INFO(name);
    CHECK(lines_of(content).size() == 2 + 2);
  }
}

TEST_CASE("grouping-report prints groups and purity") {
  const std::string cfg = small_config_file("cli_report.cfg");
  const auto res = testutil::run_command(kCli + " grouping-report --config " + cfg);
  REQUIRE(res.exit_code == 0);
  CHECK(res.output.find("group 0:") != std::string::npos);
  CHECK(res.output.find("purity:") != std::string::npos);

  // case1 with clean clusters: the report should find purity 1
  CHECK(res.output.find("purity: 1.000000") != std::string::npos);
}

TEST_CASE("cli failures exit nonzero with a diagnostic") {
  const auto res = testutil::run_command(kCli + " run --config /nonexistent.cfg");
  CHECK(res.exit_code == 1);
  CHECK(res.output.find("error:") != std::string::npos);

  const std::string bad = testutil::temp_path("cli_bad.cfg");
  testutil::write_file(bad, "nope=1\n");
  const auto res2 = testutil::run_command(kCli + " run --config " + bad);
  CHECK(res2.exit_code == 1);
  CHECK(res2.output.find("nope") != std::string::npos);

  const auto res3 = testutil::run_command(kCli + " frobnicate");
  CHECK(res3.exit_code != 0);
}

TEST_CASE("run can dump the generated dataset") {
  const std::string cfg = small_config_file("cli_dump.cfg");
  const std::string out = testutil::temp_path("cli_dump.csv");
  const std::string dump = testutil::temp_path("cli_dump_data.csv");

  const auto res = testutil::run_command(kCli + " run --config " + cfg + " --set dump_data=" +
                                         dump + " rounds=1 --out " + out);
  REQUIRE(res.exit_code == 0);
  const auto lines = lines_of(testutil::read_file(dump));
  REQUIRE(lines.size() >= 2);
  CHECK(lines[0] == "label,pixel0,pixel1,pixel2,pixel3,pixel4,pixel5");
}

namespace {

void write_idx_pair(const std::string& images_path, const std::string& labels_path,
                    std::size_t count, std::size_t rows, std::size_t cols) {
  std::string images;
  testutil::push_u32_be(images, 0x803);
  testutil::push_u32_be(images, std::uint32_t(count));
  testutil::push_u32_be(images, std::uint32_t(rows));
  testutil::push_u32_be(images, std::uint32_t(cols));
  std::string labels;
  testutil::push_u32_be(labels, 0x801);
  testutil::push_u32_be(labels, std::uint32_t(count));
  for (std::size_t i = 0; i < count; ++i) {
    const int label = int(i % 2);
    labels.push_back(char(label));
    for (std::size_t p = 0; p < rows * cols; ++p) {
      // two blocky class templates plus a little per-sample texture
      const unsigned base = label == 0 ? (p < rows * cols / 2 ? 200 : 20)
                                       : (p < rows * cols / 2 ? 20 : 200);
      images.push_back(char((base + 7 * i + p) % 256));
    }
  }
  testutil::write_file(images_path, images);
  testutil::write_file(labels_path, labels);
}

}  // namespace

TEST_CASE("run trains end to end on idx files") {
  const std::string train_images = testutil::temp_path("cli_train_images.idx");
  const std::string train_labels = testutil::temp_path("cli_train_labels.idx");
  const std::string test_images = testutil::temp_path("cli_test_images.idx");
  const std::string test_labels = testutil::temp_path("cli_test_labels.idx");
  write_idx_pair(train_images, train_labels, 80, 2, 2);
  write_idx_pair(test_images, test_labels, 20, 2, 2);

  const std::string cfg = testutil::temp_path("cli_idx.cfg");
  testutil::write_file(cfg, "dataset=idx\n"
                            "idx_train_images=" + train_images + "\n"
                            "idx_train_labels=" + train_labels + "\n"
                            "idx_test_images=" + test_images + "\n"
                            "idx_test_labels=" + test_labels + "\n"
                            "hidden=6\n"
                            "n_devices=4\n"
                            "per_device=10\n"
                            "groups=2\n"
                            "rounds=2\n"
                            "epochs=2\n"
                            "batch_size=5\n"
                            "lr=0.1\n"
                            "case=iid\n"
                            "strategy=fldg\n"
                            "seed=2\n");
  const std::string out = testutil::temp_path("cli_idx.csv");
  const auto res = testutil::run_command(kCli + " run --config " + cfg + " --out " + out);
  REQUIRE(res.exit_code == 0);
  const auto lines = lines_of(testutil::read_file(out));
  REQUIRE(lines.size() == 2 + 2);
  CHECK(lines[0].find("dataset=idx") != std::string::npos);
}
