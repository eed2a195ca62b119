#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <thread>

#include "csc/errors.hpp"
#include "csc/experiment.hpp"
#include "doctest.h"

using namespace csc;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("csc_exp_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

ExperimentConfig tiny(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  c.seed = 5;
  c.num_classes = 3;
  c.image_size = 8;
  c.train_per_class = 40;
  c.test_per_class = 15;
  c.conv1_channels = 3;
  c.conv2_channels = 4;
  c.feature_dim = 12;
  c.epochs = 4;
  c.batch_size = 16;
  c.ep_detect = 2;
  c.perplexity = 8;
  c.tsne_iterations = 260;
  c.min_pts = 5;
  c.conceal_epochs = 2;
  c.unlearn_epochs = 1;
  c.ac_proj_dims = 4;
  c.poison_rate = 0.2;
  c.out_dir = scratch(name);
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CSC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("seed derivation separates streams") {
  ExperimentConfig c;
  CHECK(derive_seed(c, SeedStream::tsne) != derive_seed(c, SeedStream::shuffle));
  auto d = c;
  d.seed = 2;
  CHECK(derive_seed(c, SeedStream::tsne) != derive_seed(d, SeedStream::tsne));
  CHECK(derive_seed(c, SeedStream::tsne) == derive_seed(ExperimentConfig{}, SeedStream::tsne));
}

TEST_CASE("prepared data has the expected poison count and triggered set") {
  const auto cfg = tiny("prep");
  const auto d = prepare_data(cfg);
  CHECK(d.train.size() == 120);
  CHECK(d.eligible == 80);
  CHECK(d.train.poisoned_indices().size() == 16);
  CHECK(d.triggered.size() == 30);
  CHECK(d.train_clean.labels.size() == 120);
}

TEST_CASE("identical configs give bit-identical reports") {
  const auto cfg = tiny("determinism");
  const auto data = prepare_data(cfg);
  const auto a = run_pipeline(cfg, data);
  const auto b = run_pipeline(cfg, prepare_data(cfg));
  CHECK(report_to_json(a.report, false) == report_to_json(b.report, false));
  CHECK(a.concealed.params == b.concealed.params);
  CHECK(extractor_snapshot(a.concealed) == extractor_snapshot(a.undefended));
  auto other = cfg;
  other.seed = 6;
  CHECK(report_to_json(run_pipeline(other, prepare_data(other)).report, false) != report_to_json(a.report, false));
}

TEST_CASE("EP_detect = 0 segregates nothing") {
  auto cfg = tiny("ep0");
  cfg.ep_detect = 0;
  const auto art = run_pipeline(cfg, prepare_data(cfg));
  CHECK(art.report.segregated == 0);
  CHECK(art.report.detection_recall == 0.0);
  CHECK_FALSE(art.report.unlearning.has_value());
  CHECK(art.report.segregation.empty());
}

TEST_CASE("run_experiment writes the report, masks and index") {
  auto cfg = tiny("outputs");
  cfg.dump_embeddings = true;
  cfg.svg = true;
  cfg.save_models = true;
  const auto r = run_experiment(cfg);
  const auto p = run_paths(cfg);
  CHECK(report_from_json(slurp(p.report)) == r);
  const auto masks = slurp(p.masks);
  CHECK(masks.rfind("index,label,poisoned,csc,ss,ac\n", 0) == 0);
  CHECK(count_lines(masks) == 121);
  CHECK(count_lines(slurp(p.index)) == 2);
  const auto emb = slurp(p.embeddings);
  CHECK(emb.rfind("epoch,sample_index,x,y,cluster_id,label,is_suspicious\n", 0) == 0);
  CHECK(count_lines(emb) == 1 + 2 * 120);
  bool svg = false;
  for (const auto& e : std::filesystem::directory_iterator(cfg.out_dir)) svg |= e.path().extension() == ".svg";
  CHECK(svg);
  CHECK(std::filesystem::exists(p.concealed_model));
  run_experiment(cfg);
  CHECK(count_lines(slurp(p.index)) == 3);
}

TEST_CASE("a shared trajectory matches a separate run with the same clustering") {
  auto cfg = tiny("shared");
  const auto data = prepare_data(cfg);
  const auto arts = run_pipeline(cfg, data, {{cfg.eps, 5}, {cfg.eps, 9}, {1.5, 5}});
  REQUIRE(arts.size() == 3);
  auto separate = cfg;
  separate.min_pts = 9;
  const auto solo = run_pipeline(separate, data);
  CHECK(report_to_json(arts[1].report, false) == report_to_json(solo.report, false));
  auto benign = cfg;
  benign.post_segregation = PostSegregationTraining::benign;
  CHECK_THROWS_AS(run_pipeline(benign, data, {{3.0, 5}, {3.0, 9}}), ConfigError);
}

TEST_CASE("sweeps write one row per value") {
  auto cfg = tiny("sweep");
  cfg.run_baselines = false;
  const auto reports = run_sweep(cfg, SweepAxis::gamma, {0.05, 0.1, 0.2});
  REQUIRE(reports.size() == 3);
  CHECK(reports[0].poison.poisoned == 4);
  CHECK(reports[1].poison.poisoned == 8);
  CHECK(reports[2].poison.poisoned == 16);
  CHECK(reports[1].name == "sweep_gamma_0.1");
  CHECK(count_lines(slurp(cfg.out_dir / "sweep_gamma.csv")) == 4);
  const auto mp = run_sweep(cfg, SweepAxis::min_pts, {10, 30, 50, 70});
  CHECK(mp.size() == 4);
  CHECK(mp[0].undefended == mp[3].undefended);
  CHECK(count_lines(slurp(cfg.out_dir / "sweep_min_pts.csv")) == 5);
  try {
    run_sweep(cfg, SweepAxis::eps, {});
    FAIL("empty sweep accepted");
  } catch (const StageError& e) {
    CHECK(e.exit_code() == 2);
  }
  CHECK(parse_sweep_axis("gamma") == SweepAxis::gamma);
  CHECK_THROWS_AS(parse_sweep_axis("lr"), ConfigError);
}

TEST_CASE("concurrent CSV appends stay intact") {
  const auto path = scratch("lock") / "rows.csv";
  constexpr int kThreads = 8, kRows = 50;
  std::vector<std::thread> th;
  for (int t = 0; t < kThreads; ++t)
    th.emplace_back([&, t] {
      for (int r = 0; r < kRows; ++r)
        append_csv_locked(path, {"thread", "row", "payload"},
                          {std::to_string(t), std::to_string(r), std::string(200, static_cast<char>('a' + t))});
    });
  for (auto& t : th) t.join();
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "thread,row,payload");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
    REQUIRE(c2 != std::string::npos);
    const int t = std::stoi(line.substr(0, c1));
    CHECK(line.substr(c2 + 1) == std::string(200, static_cast<char>('a' + t)));
  }
  CHECK(rows == kThreads * kRows);
}

TEST_CASE("exception categories map to exit codes") {
  CHECK(exit_code_for(ConfigError("x")) == 2);
  CHECK(exit_code_for(DataError("x")) == 3);
  CHECK(exit_code_for(FormatError("x")) == 3);
  CHECK(exit_code_for(ShapeError("x")) == 4);
  CHECK(exit_code_for(std::runtime_error("x")) == 4);
  CHECK(exit_code_for(StageError("s", "x", 3)) == 3);
}

TEST_CASE("CLI exit codes") {
  const auto cfg = tiny("cli");
  const auto dir = cfg.out_dir;
  const std::string tiny_cfg = (dir / "tiny.cfg").string();
  {
    std::ofstream f(tiny_cfg);
    f << format_config(cfg);
  }
  const std::string out = " --out-dir " + (dir / "out").string();
  CHECK(run_cli("run -q --config " + tiny_cfg + out) == 0);
  CHECK(std::filesystem::exists(dir / "out" / "cli.json"));
  CHECK(run_cli("run -q --config " + tiny_cfg + " --seed 9 --set name=cli9" + out) == 0);
  CHECK(run_cli("attack -q --config " + tiny_cfg + " --kind blend --out " + (dir / "blend.csc").string()) == 0);
  CHECK(load_dataset(dir / "blend.csc").poisoned_indices().size() == 16);
  CHECK(run_cli("dump-embeddings -q --config " + tiny_cfg + out + " --set name=emb") == 0);
  CHECK(std::filesystem::exists(dir / "out" / "emb.embeddings.csv"));
  CHECK(run_cli("sweep -q --config " + tiny_cfg + out + " --axis eps --values 2,4") == 0);

  CHECK(run_cli("run -q --config /nonexistent.cfg" + out) == 2);
  CHECK(run_cli("run -q --config " + tiny_cfg + " --set epochs=abc" + out) == 2);
  CHECK(run_cli("sweep -q --config " + tiny_cfg + " --axis lr --values 1" + out) == 2);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("run -q --config " + tiny_cfg + " --set source=idx --data-dir /nonexistent" + out) == 3);
  {
    std::ofstream f(dir / "bad.csc");
    f << "CSC1garbage";
  }
  CHECK(run_cli("run -q --config " + tiny_cfg + " --set source=container --set train_container=bad.csc "
                "--set test_container=bad.csc --data-dir " + dir.string() + out) == 3);
}
