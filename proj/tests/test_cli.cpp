// Exercises the installed command-line binary end to end through a
// subprocess; the binary path arrives via the DDGKIT_CLI_PATH compile
// definition.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest/doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>
#include <nlohmann/json.hpp>

#include "ddgkit/checkpoint.hpp"
#include "ddgkit/energy.hpp"
#include "ddgkit/net.hpp"
#include "ddgkit/rng.hpp"
#include "ddgkit/skempi.hpp"
#include "ddgkit/types.hpp"
#include "support/fixtures.hpp"

namespace fs = std::filesystem;
using namespace ddgkit;
using testing::TempDir;

namespace {

struct CliRun {
  int code = -1;
  std::string output;  // stdout and stderr combined
};

CliRun run_cli(const std::string& args, const fs::path& scratch) {
  static int counter = 0;
  const fs::path log = scratch / ("cli_out_" + std::to_string(counter++) + ".txt");
  const std::string cmd =
      std::string(DDGKIT_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.output = testing::read_file(log);
  return r;
}

// Small-but-complete dataset plus a config file pointing at it.
struct CliFixture {
  TempDir tmp;
  testing::FixtureSet set;
  fs::path logprob;
  fs::path out_dir;

  explicit CliFixture(const std::string& tag) : tmp("cli-" + tag) {
    testing::FixtureSpec spec;
    spec.n_complexes = 4;
    spec.records_per_complex = 2;
    spec.n_binder = 4;
    spec.n_target = 4;
    spec.seed = 9;
    set = testing::make_fixture_set(tmp.path() / "data", spec);
    logprob = tmp.path() / "logprob.csv";
    testing::write_logprob_csv(logprob, set.complexes, 404);
    out_dir = tmp.path() / "runs";
  }

  nlohmann::json base_config() const {
    nlohmann::json j;
    j["paths"] = {{"structures_dir", set.structures_dir.string()},
                  {"skempi_csv", set.skempi_csv.string()},
                  {"logprob_file", logprob.string()},
                  {"out_dir", out_dir.string()}};
    j["model"] = {{"embed_dim", 8},
                  {"encoder_hidden", 16},
                  {"interaction_hidden", 16},
                  {"n_rbf", 8},
                  {"r_max", 10.0}};
    j["k_neighborhood"] = 5;
    j["dsm"] = {{"sigma2", 0.1}, {"steps", 5}, {"lr", 1e-3}, {"k", 5}};
    j["langevin"] = {{"steps", 3},
                     {"alpha0", 1e-4},
                     {"eta0", 1e-2},
                     {"sigma2_prior", 1.0},
                     {"anneal", true}};
    j["train"] = {{"lr", 1e-3},
                  {"batch_size", 2},
                  {"max_steps", 4},
                  {"patience", 10},
                  {"beta_kl", 1e-3},
                  {"train_provider", false}};
    j["folds"] = {{"n_folds", 2}, {"val_frac", 0.1}, {"fold", -1}};
    j["seed"] = 5;
    return j;
  }

  fs::path write_config(const nlohmann::json& j,
                        const std::string& name = "config.json") const {
    const fs::path path = tmp.path() / name;
    std::ofstream out(path);
    out << j.dump(2) << "\n";
    return path;
  }
};

// Every command names its run directory "<command>-<config hash>".
fs::path find_run_dir(const fs::path& out_dir, const std::string& command) {
  std::vector<fs::path> hits;
  for (const auto& entry : fs::directory_iterator(out_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind(command + "-", 0) == 0 &&
        name.find(".partial") == std::string::npos) {
      hits.push_back(entry.path());
    }
  }
  REQUIRE(hits.size() == 1);
  return hits[0];
}

std::size_t count_lines(const std::string& text) {
  std::size_t n = 0;
  for (char c : text) n += c == '\n' ? 1 : 0;
  return n;
}

std::string g17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string mutation_field(const MutationSet& muts) {
  std::string s = mutations_to_string(muts);
  for (char& c : s) {
    if (c == ',') c = ';';
  }
  return s;
}

}  // namespace

TEST_CASE("config problems are reported together with the config exit code") {
  CliFixture fx("cfgerr");

  SUBCASE("unknown keys and type mismatches from parsing") {
    nlohmann::json j = fx.base_config();
    j["modle"] = nlohmann::json::object();  // misspelled section
    j["dsm"]["sigma2"] = "small";
    const auto cfg = fx.write_config(j);
    const CliRun r = run_cli("ingest --config " + cfg.string(), fx.tmp.path());
    CHECK(r.code == 2);
    CHECK(r.output.find("modle: unknown field") != std::string::npos);
    CHECK(r.output.find("dsm.sigma2") != std::string::npos);
  }

  SUBCASE("every out-of-range field is listed at once") {
    nlohmann::json j = fx.base_config();
    j["model"]["embed_dim"] = 0;
    j["folds"]["val_frac"] = 1.5;
    j["train"]["batch_size"] = 0;
    const auto cfg = fx.write_config(j);
    const CliRun r = run_cli("ingest --config " + cfg.string(), fx.tmp.path());
    CHECK(r.code == 2);
    CHECK(r.output.find("model.embed_dim") != std::string::npos);
    CHECK(r.output.find("folds.val_frac") != std::string::npos);
    CHECK(r.output.find("train.batch_size") != std::string::npos);
  }

  SUBCASE("missing input files name the offending path field") {
    nlohmann::json j = fx.base_config();
    j["paths"]["skempi_csv"] = (fx.tmp.path() / "nope.csv").string();
    const auto cfg = fx.write_config(j);
    const CliRun r = run_cli("ingest --config " + cfg.string(), fx.tmp.path());
    CHECK(r.code == 2);
    CHECK(r.output.find("paths.skempi_csv") != std::string::npos);
    CHECK(r.output.find("does not exist") != std::string::npos);
  }

  SUBCASE("unreadable config file is an io failure") {
    const CliRun r = run_cli(
        "ingest --config " + (fx.tmp.path() / "ghost.json").string(),
        fx.tmp.path());
    CHECK(r.code == 5);
  }

  SUBCASE("non-json text is a config failure") {
    const fs::path path = fx.tmp.path() / "broken.json";
    std::ofstream(path) << "not json at all {";
    const CliRun r = run_cli("ingest --config " + path.string(), fx.tmp.path());
    CHECK(r.code == 2);
  }
}

TEST_CASE("malformed dataset inputs use the ingest exit code") {
  CliFixture fx("ingesterr");
  nlohmann::json j = fx.base_config();
  const fs::path bad_csv = fx.tmp.path() / "bad_records.csv";
  std::ofstream(bad_csv) << "pdb_id,binder\nXYZ,A\n";
  j["paths"]["skempi_csv"] = bad_csv.string();
  const auto cfg = fx.write_config(j);
  const CliRun r = run_cli("ingest --config " + cfg.string(), fx.tmp.path());
  CHECK(r.code == 3);
}

TEST_CASE("the pipeline runs end to end on a synthetic dataset") {
  CliFixture fx("pipeline");
  const auto cfg = fx.write_config(fx.base_config());
  const std::string base = " --config " + cfg.string();

  // --- ingest
  CliRun r = run_cli("ingest" + base, fx.tmp.path());
  REQUIRE_MESSAGE(r.code == 0, r.output);
  const fs::path ingest_dir = find_run_dir(fx.out_dir, "ingest");
  {
    const auto j = nlohmann::json::parse(
        testing::read_file(ingest_dir / "summary.json"));
    CHECK(j["n_records"] == 8);
    CHECK(j["n_complexes"] == 4);
    CHECK(j["dropped_missing_ddg"] == 0);
  }
  CHECK(fs::exists(ingest_dir / "manifest.json"));

  // --- pretrain
  r = run_cli("pretrain" + base, fx.tmp.path());
  REQUIRE_MESSAGE(r.code == 0, r.output);
  const fs::path pretrain_dir = find_run_dir(fx.out_dir, "pretrain");
  const fs::path ref_ckpt = pretrain_dir / "ref_model.ckpt";
  REQUIRE(fs::exists(ref_ckpt));
  CHECK(count_lines(testing::read_file(pretrain_dir / "loss_log.csv")) ==
        1 + 5);  // header + one row per optimization step

  // --- train (checkpoint path extends the config, so a new hash)
  nlohmann::json train_cfg = fx.base_config();
  train_cfg["paths"]["checkpoint"] = ref_ckpt.string();
  const auto cfg2 = fx.write_config(train_cfg, "config_train.json");
  r = run_cli("train --config " + cfg2.string(), fx.tmp.path());
  REQUIRE_MESSAGE(r.code == 0, r.output);
  const fs::path train_dir = find_run_dir(fx.out_dir, "train");
  CHECK(fs::exists(train_dir / "folds.csv"));
  for (const std::string fold : {"fold0", "fold1"}) {
    CAPTURE(fold);
    REQUIRE(fs::exists(train_dir / fold / "model.ckpt"));
    CHECK(count_lines(testing::read_file(train_dir / fold / "train_log.csv")) >=
          2);
    // Two test complexes with two records each per fold.
    CHECK(count_lines(
              testing::read_file(train_dir / fold / "predictions.csv")) ==
          1 + 4);
    CHECK_NOTHROW((void)nlohmann::json::parse(
        testing::read_file(train_dir / fold / "metrics.json")));
  }

  // --- predict with the trained fold-0 checkpoint
  nlohmann::json pred_cfg = fx.base_config();
  pred_cfg["paths"]["checkpoint"] = (train_dir / "fold0" / "model.ckpt").string();
  const auto cfg3 = fx.write_config(pred_cfg, "config_predict.json");
  r = run_cli("predict --config " + cfg3.string(), fx.tmp.path());
  REQUIRE_MESSAGE(r.code == 0, r.output);
  const fs::path predict_dir = find_run_dir(fx.out_dir, "predict");
  const fs::path preds_csv = predict_dir / "predictions.csv";
  const std::string preds_text = testing::read_file(preds_csv);
  CHECK(count_lines(preds_text) == 1 + 8);
  CHECK(preds_text.rfind(
            "complex_id,mutations,ddg_hat,ddg_ba,dde,sampled_structure_path",
            0) == 0);
  {
    std::size_t samples = 0;
    for (const auto& entry :
         fs::directory_iterator(predict_dir / "samples")) {
      (void)entry;
      ++samples;
    }
    CHECK(samples == 8);  // one sampled structure per non-degenerate record
  }

  // --- evaluate those predictions against the labels
  r = run_cli("evaluate " + preds_csv.string() + base, fx.tmp.path());
  REQUIRE_MESSAGE(r.code == 0, r.output);
  const fs::path eval_dir = find_run_dir(fx.out_dir, "evaluate");
  {
    const auto j = nlohmann::json::parse(
        testing::read_file(eval_dir / "metrics.json"));
    CHECK(j["n_records"] == 8);
    CHECK(j["rmse"].is_number());
  }

  // --- rank the same predictions
  r = run_cli("rank " + preds_csv.string() + base, fx.tmp.path());
  REQUIRE_MESSAGE(r.code == 0, r.output);
  const fs::path rank_dir = find_run_dir(fx.out_dir, "rank");
  const std::string ranking = testing::read_file(rank_dir / "ranking.csv");
  CHECK(count_lines(ranking) == 1 + 8);
  CHECK(ranking.rfind("complex_id,mutations,ddg_hat,rank,rank_percent", 0) ==
        0);

  // --- evaluate rejects a truncated predictions file
  const fs::path short_csv = fx.tmp.path() / "short.csv";
  {
    std::istringstream in(preds_text);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    std::ofstream(short_csv) << header << "\n" << row << "\n";
  }
  r = run_cli("evaluate " + short_csv.string() + base, fx.tmp.path());
  CHECK(r.code == 3);

  // --- evaluate requires the predictions file to exist
  r = run_cli("evaluate " + (fx.tmp.path() / "none.csv").string() + base,
              fx.tmp.path());
  CHECK(r.code == 5);
}

TEST_CASE("identical config and seed reproduce a run byte for byte") {
  CliFixture fx("rerun");
  const auto cfg = fx.write_config(fx.base_config());
  const std::string base = " --config " + cfg.string();

  CliRun r = run_cli("pretrain" + base, fx.tmp.path());
  REQUIRE_MESSAGE(r.code == 0, r.output);
  const fs::path dir = find_run_dir(fx.out_dir, "pretrain");
  const std::string ckpt_a = testing::read_file(dir / "ref_model.ckpt");
  const std::string log_a = testing::read_file(dir / "loss_log.csv");

  r = run_cli("pretrain" + base, fx.tmp.path());
  REQUIRE_MESSAGE(r.code == 0, r.output);
  // Same config hash, same directory name, identical artifacts.
  CHECK(testing::read_file(dir / "ref_model.ckpt") == ckpt_a);
  CHECK(testing::read_file(dir / "loss_log.csv") == log_a);

  SUBCASE("a different seed lands in a different directory") {
    const fs::path other_out = fx.tmp.path() / "runs_seed6";
    r = run_cli("pretrain" + base + " --seed 6 --out " + other_out.string(),
                fx.tmp.path());
    REQUIRE_MESSAGE(r.code == 0, r.output);
    const fs::path dir6 = find_run_dir(other_out, "pretrain");
    CHECK(dir6.filename() != dir.filename());
    CHECK(testing::read_file(dir6 / "ref_model.ckpt") != ckpt_a);
  }
}

TEST_CASE("predictions equal to the labels evaluate to a perfect fit") {
  CliFixture fx("perfect");
  const auto cfg = fx.write_config(fx.base_config());

  // Labels exactly as the evaluator will parse them.
  const SkempiTable table = parse_skempi_table(fx.set.skempi_csv);
  const fs::path preds = fx.tmp.path() / "echo_preds.csv";
  {
    std::ofstream out(preds);
    out << "complex_id,mutations,ddg_hat,ddg_ba,dde,sampled_structure_path\n";
    for (const SkempiRecord& rec : table.records) {
      out << rec.pdb_id << ',' << mutation_field(rec.mutations) << ','
          << g17(rec.ddg_label) << ",0,0,\n";
    }
  }

  const CliRun r = run_cli(
      "evaluate " + preds.string() + " --config " + cfg.string(),
      fx.tmp.path());
  REQUIRE_MESSAGE(r.code == 0, r.output);
  const auto j = nlohmann::json::parse(testing::read_file(
      find_run_dir(fx.out_dir, "evaluate") / "metrics.json"));
  CHECK(j["rmse"].get<double>() == 0.0);
  CHECK(j["mae"].get<double>() == 0.0);
  CHECK(j["pearson"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(j["spearman"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gradient self-check passes for every block") {
  CliFixture fx("gradcheck");
  const auto cfg = fx.write_config(fx.base_config());
  const CliRun r =
      run_cli("gradcheck --config " + cfg.string(), fx.tmp.path());
  REQUIRE_MESSAGE(r.code == 0, r.output);
  const auto j = nlohmann::json::parse(testing::read_file(
      find_run_dir(fx.out_dir, "gradcheck") / "gradcheck.json"));
  CHECK(j["all_pass"] == true);
  REQUIRE(j["checks"].size() == 4);
  for (const auto& c : j["checks"]) {
    CAPTURE(c["name"].get<std::string>());
    CHECK(c["pass"] == true);
    CHECK(c["max_rel_error"].get<double>() < 1e-5);
  }
}

TEST_CASE("failed runs clean up their partial output directory") {
  CliFixture fx("abort");

  // A checkpoint trained at one width, then a config asking for another:
  // the metadata cross-check rejects the pair after the run dir exists.
  const auto cfg = fx.write_config(fx.base_config());
  CliRun r = run_cli("pretrain --config " + cfg.string(), fx.tmp.path());
  REQUIRE_MESSAGE(r.code == 0, r.output);
  const fs::path ckpt =
      find_run_dir(fx.out_dir, "pretrain") / "ref_model.ckpt";

  nlohmann::json bad = fx.base_config();
  bad["paths"]["checkpoint"] = ckpt.string();
  bad["model"]["embed_dim"] = 12;
  const fs::path fresh_out = fx.tmp.path() / "runs_abort";
  bad["paths"]["out_dir"] = fresh_out.string();
  const auto cfg_bad = fx.write_config(bad, "config_bad.json");

  r = run_cli("predict --config " + cfg_bad.string(), fx.tmp.path());
  CHECK(r.code == 2);
  CHECK(r.output.find("conflicts with config value") != std::string::npos);
  // The staging directory was created under the fresh output root and
  // must be gone; nothing else may have been committed there either.
  REQUIRE(fs::exists(fresh_out));
  CHECK(fs::is_empty(fresh_out));
}

TEST_CASE("zero pretraining steps emit the freshly initialized model") {
  CliFixture fx("zerosteps");
  nlohmann::json j = fx.base_config();
  j["dsm"]["steps"] = 0;
  const auto cfg = fx.write_config(j);

  const CliRun r = run_cli("pretrain --config " + cfg.string(), fx.tmp.path());
  REQUIRE_MESSAGE(r.code == 0, r.output);
  const fs::path dir = find_run_dir(fx.out_dir, "pretrain");
  CHECK(count_lines(testing::read_file(dir / "loss_log.csv")) == 1);

  // The checkpoint must hold exactly the seeded initialization.
  EnergyModelConfig mc;
  mc.embed_dim = 8;
  mc.encoder_hidden = 16;
  mc.interaction_hidden = 16;
  mc.rbf.n_rbf = 8;
  mc.rbf.r_max = 10.0;
  Rng rng(5);
  EnergyModel expect = init_energy_model(mc, rng);
  EnergyGrads grads;
  grads.init_like(expect);
  ParamSet params;
  bind_energy_params(expect, grads, params, "ref.");
  const std::vector<CheckpointEntry> want = checkpoint_entries(params);

  const std::vector<CheckpointEntry> got =
      read_checkpoint(dir / "ref_model.ckpt");
  for (const CheckpointEntry& w : want) {
    CAPTURE(w.name);
    REQUIRE(checkpoint_has(got, w.name));
    for (const CheckpointEntry& g : got) {
      if (g.name != w.name) continue;
      REQUIRE(g.shape == w.shape);
      CHECK(g.data == w.data);
    }
  }
}

TEST_CASE("the sample command writes a full trajectory for one record") {
  CliFixture fx("sample");
  nlohmann::json j = fx.base_config();
  const auto cfg0 = fx.write_config(j);
  CliRun r = run_cli("pretrain --config " + cfg0.string(), fx.tmp.path());
  REQUIRE_MESSAGE(r.code == 0, r.output);
  j["paths"]["checkpoint"] =
      (find_run_dir(fx.out_dir, "pretrain") / "ref_model.ckpt").string();
  const auto cfg = fx.write_config(j, "config_sample.json");

  r = run_cli("sample 0 --config " + cfg.string(), fx.tmp.path());
  REQUIRE_MESSAGE(r.code == 0, r.output);
  const fs::path dir = find_run_dir(fx.out_dir, "sample");
  CHECK(fs::exists(dir / "trajectory.csv"));
  CHECK(fs::exists(dir / "final_coords.csv"));

  SUBCASE("an out-of-range record index is a config failure") {
    r = run_cli("sample 99 --config " + cfg.string(), fx.tmp.path());
    CHECK(r.code == 2);
    CHECK(r.output.find("out of range") != std::string::npos);
  }
}

TEST_CASE("the step sweep reports metrics for each chain length") {
  CliFixture fx("sweep");
  nlohmann::json j = fx.base_config();
  const auto cfg0 = fx.write_config(j);
  CliRun r = run_cli("pretrain --config " + cfg0.string(), fx.tmp.path());
  REQUIRE_MESSAGE(r.code == 0, r.output);
  j["paths"]["checkpoint"] =
      (find_run_dir(fx.out_dir, "pretrain") / "ref_model.ckpt").string();
  const auto cfg = fx.write_config(j, "config_sweep.json");

  r = run_cli("sweep --t-list 1 2 --config " + cfg.string(), fx.tmp.path());
  REQUIRE_MESSAGE(r.code == 0, r.output);
  const fs::path dir = find_run_dir(fx.out_dir, "sweep");
  const std::string csv = testing::read_file(dir / "sweep.csv");
  CHECK(csv.rfind("steps,pearson,spearman,rmse,mae,auroc,n_records", 0) == 0);
  CHECK(count_lines(csv) == 1 + 2);
  CHECK(csv.find("\n1,") != std::string::npos);
  CHECK(csv.find("\n2,") != std::string::npos);
}
