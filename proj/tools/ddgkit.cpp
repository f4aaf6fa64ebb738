// Command-line front end for the ddg prediction pipeline.
//
// Subcommands: ingest, pretrain, train, predict, rank, evaluate,
// gradcheck, sample, sweep. Every command writes its outputs plus a
// manifest into <out_dir>/<command>-<config-hash>; reruns with the same
// config and seed reproduce that directory bitwise. Outputs are staged
// in a ".partial" directory that is renamed on success and removed on
// any failure, so aborted runs leave nothing behind.
//
// Exit codes: 0 ok, 2 config, 3 ingest, 4 numeric, 5 io, 1 other.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI/CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ddgkit/checkpoint.hpp"
#include "ddgkit/config.hpp"
#include "ddgkit/ddg.hpp"
#include "ddgkit/dsm.hpp"
#include "ddgkit/energy.hpp"
#include "ddgkit/error.hpp"
#include "ddgkit/folds.hpp"
#include "ddgkit/geometry.hpp"
#include "ddgkit/logprob_file.hpp"
#include "ddgkit/manifest.hpp"
#include "ddgkit/metrics.hpp"
#include "ddgkit/mutation.hpp"
#include "ddgkit/pdb.hpp"
#include "ddgkit/ranking.hpp"
#include "ddgkit/sampler.hpp"
#include "ddgkit/skempi.hpp"
#include "ddgkit/synthetic.hpp"

#ifndef DDGKIT_VERSION
#define DDGKIT_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace ddgkit;

namespace {

// ---------------------------------------------------------------- plumbing

std::string g17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string mutations_csv(const MutationSet& muts) {
  std::string s = mutations_to_string(muts);
  for (char& c : s) {
    if (c == ',') c = ';';
  }
  return s;
}

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> fold;
  std::string out_dir;
  std::optional<int> steps;
  std::string logprob_file;
};

RunConfig effective_config(const CommonFlags& flags) {
  RunConfig cfg;
  if (!flags.config_path.empty()) cfg = load_config(flags.config_path);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.fold) cfg.folds.fold = *flags.fold;
  if (!flags.out_dir.empty()) cfg.paths.out_dir = flags.out_dir;
  if (flags.steps) cfg.langevin.steps = *flags.steps;
  if (!flags.logprob_file.empty()) cfg.paths.logprob_file = flags.logprob_file;
  wire_config(cfg);
  return cfg;
}

void require_fields(const RunConfig& cfg,
                    const std::vector<std::string>& paths) {
  const std::vector<std::string> bad = validate_config(cfg, paths);
  if (bad.empty()) return;
  std::string msg = "invalid config:";
  for (const auto& item : bad) msg += "\n  - " + item;
  throw ConfigError(msg);
}

// Staged output directory: write into "<final>.partial", commit() renames
// it over the final path; anything uncommitted is deleted on unwind.
class RunDir {
 public:
  RunDir(const RunConfig& cfg, const std::string& command)
      : final_(fs::path(cfg.paths.out_dir) /
               (command + "-" + config_hash_hex(cfg).substr(0, 12))),
        partial_(final_.string() + ".partial") {
    fs::remove_all(partial_);
    fs::create_directories(partial_);
  }

  RunDir(const RunDir&) = delete;
  RunDir& operator=(const RunDir&) = delete;

  ~RunDir() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(partial_, ec);
    }
  }

  const fs::path& dir() const { return partial_; }

  fs::path commit() {
    fs::remove_all(final_);
    fs::rename(partial_, final_);
    committed_ = true;
    return final_;
  }

 private:
  fs::path final_;
  fs::path partial_;
  bool committed_ = false;
};

void emit_manifest(const RunDir& run, const std::string& command,
                   const RunConfig& cfg) {
  Manifest m;
  m.command = command;
  m.config = cfg;
  m.seed = cfg.seed;
  m.version = DDGKIT_VERSION;
  write_manifest(run.dir() / "manifest.json", m);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

// ---------------------------------------------------------------- dataset

struct Dataset {
  SkempiTable table;
  std::map<std::string, Complex> complexes;  // pdb_id -> structure
  std::vector<const Complex*> record_cx;     // per record
};

Dataset load_dataset(const RunConfig& cfg) {
  Dataset ds;
  ds.table = parse_skempi_table(fs::path(cfg.paths.skempi_csv));
  for (std::size_t i = 0; i < ds.table.records.size(); ++i) {
    const SkempiRecord& rec = ds.table.records[i];
    auto it = ds.complexes.find(rec.pdb_id);
    if (it == ds.complexes.end()) {
      Complex cx =
          parse_pdb(fs::path(cfg.paths.structures_dir) / (rec.pdb_id + ".pdb"));
      assign_chain_groups(cx, rec.binder_chains, rec.target_chains);
      ds.complexes.emplace(rec.pdb_id, std::move(cx));
    } else if (it->second.binder_chains != rec.binder_chains ||
               it->second.target_chains != rec.target_chains) {
      throw IngestError("record " + std::to_string(i + 1) + " for " +
                        rec.pdb_id +
                        " disagrees with an earlier record's chain groups");
    }
  }
  for (const SkempiRecord& rec : ds.table.records) {
    ds.record_cx.push_back(&ds.complexes.at(rec.pdb_id));
  }
  return ds;
}

// ---------------------------------------------------------------- models

std::vector<CheckpointEntry> model_checkpoint_entries(EnergyModel& model,
                                                      const std::string& prefix) {
  EnergyGrads grads;
  grads.init_like(model);
  ParamSet params;
  bind_energy_params(model, grads, params, prefix);
  return checkpoint_entries(params);
}

void append_meta(std::vector<CheckpointEntry>& entries,
                 const EnergyModelConfig& mc) {
  auto scalar = [&entries](const std::string& name, double v) {
    entries.push_back({name, {1}, {v}});
  };
  scalar("meta.embed_dim", mc.embed_dim);
  scalar("meta.encoder_hidden", mc.encoder_hidden);
  scalar("meta.interaction_hidden", mc.interaction_hidden);
  scalar("meta.n_rbf", mc.rbf.n_rbf);
  scalar("meta.r_max", mc.rbf.r_max);
}

void check_meta(const std::vector<CheckpointEntry>& entries,
                const EnergyModelConfig& mc, const std::string& path) {
  const std::vector<std::pair<std::string, double>> expect = {
      {"meta.embed_dim", static_cast<double>(mc.embed_dim)},
      {"meta.encoder_hidden", static_cast<double>(mc.encoder_hidden)},
      {"meta.interaction_hidden", static_cast<double>(mc.interaction_hidden)},
      {"meta.n_rbf", static_cast<double>(mc.rbf.n_rbf)},
      {"meta.r_max", mc.rbf.r_max}};
  for (const auto& [name, want] : expect) {
    if (!checkpoint_has(entries, name)) continue;  // older or foreign file
    const double got = checkpoint_scalar(entries, name);
    if (got != want) {
      throw ConfigError(path + ": checkpoint " + name + " = " + g17(got) +
                        " conflicts with config value " + g17(want));
    }
  }
}

EnergyModel load_model_from(const std::vector<CheckpointEntry>& entries,
                            const EnergyModelConfig& mc,
                            const std::string& prefix) {
  Rng rng(0);
  EnergyModel model = init_energy_model(mc, rng);
  EnergyGrads grads;
  grads.init_like(model);
  ParamSet params;
  bind_energy_params(model, grads, params, prefix);
  load_checkpoint_into(entries, params);
  return model;
}

bool has_prefix(const std::vector<CheckpointEntry>& entries,
                const std::string& prefix) {
  for (const auto& e : entries) {
    if (e.name.rfind(prefix, 0) == 0) return true;
  }
  return false;
}

DdgHead load_head_from(const std::vector<CheckpointEntry>& entries,
                       double beta_kl) {
  DdgHead head;
  head.beta_kl = beta_kl;
  if (checkpoint_has(entries, "head.log_kbt")) {
    head.log_kbt = checkpoint_scalar(entries, "head.log_kbt");
    head.scale = checkpoint_scalar(entries, "head.scale");
    head.bias = checkpoint_scalar(entries, "head.bias");
  }
  return head;
}

std::vector<CheckpointEntry> head_checkpoint_entries(const DdgHead& head) {
  return {{"head.log_kbt", {1}, {head.log_kbt}},
          {"head.scale", {1}, {head.scale}},
          {"head.bias", {1}, {head.bias}}};
}

// ---------------------------------------------------------------- predict

struct RecordPrediction {
  const SkempiRecord* rec = nullptr;
  DdgPrediction pred;
  std::string sample_path;  // relative to the run directory
};

void write_sample_csv(const fs::path& path, const Neighborhood& neigh,
                      const std::vector<Eigen::Vector3d>& coords) {
  std::ofstream out = open_out(path);
  out << "chain,seq,icode,atom,x,y,z\n";
  for (std::size_t m = 0; m < neigh.member_count(); ++m) {
    const NeighborEntry& e = neigh.members[m];
    for (int a = 0; a < kBackboneAtoms; ++a) {
      const Eigen::Vector3d& p = coords[m * kBackboneAtoms +
                                        static_cast<std::size_t>(a)];
      out << e.key.chain_id << ',' << e.key.seq_index << ','
          << (e.key.icode == ' ' ? "" : std::string(1, e.key.icode)) << ','
          << kBackboneAtomNames[static_cast<std::size_t>(a)] << ','
          << g17(p.x()) << ',' << g17(p.y()) << ',' << g17(p.z()) << '\n';
    }
  }
}

std::vector<RecordPrediction> predict_records(
    const Dataset& ds, const std::vector<std::size_t>& which,
    const LogProbProvider& provider, const EnergyModel& ref,
    const EnergyModel& trained, const DdgHead& head, const RunConfig& cfg,
    const fs::path* samples_dir, const fs::path* run_root) {
  std::vector<RecordPrediction> out;
  out.reserve(which.size());
  for (const std::size_t i : which) {
    const SkempiRecord& rec = ds.table.records[i];
    PredictInputs in;
    in.wt_cx = ds.record_cx[i];
    in.muts = &rec.mutations;
    in.provider = &provider;
    in.ref_model = &ref;
    in.trainable = &trained;
    in.head = &head;
    in.langevin = cfg.langevin;
    in.k_neighborhood = cfg.k_neighborhood;
    in.plan_seed = record_plan_seed(cfg.seed, rec);

    RecordPrediction rp;
    rp.rec = &rec;
    rp.pred = predict_ddg(in);
    if (samples_dir != nullptr && !rp.pred.degenerate) {
      std::string tag = mutations_csv(rec.mutations);
      for (char& c : tag) {
        if (c == ';') c = '_';
      }
      const fs::path file = *samples_dir / (rec.pdb_id + "_" + tag + ".csv");
      const Complex mut_cx = apply_mutation_set(*ds.record_cx[i], rec.mutations);
      const Neighborhood neigh =
          select_neighborhood(mut_cx, rec.mutations, cfg.k_neighborhood);
      write_sample_csv(file, neigh, rp.pred.sampled_coords);
      rp.sample_path = fs::relative(file, *run_root).string();
    }
    out.push_back(std::move(rp));
  }
  return out;
}

void write_predictions_csv(const fs::path& path,
                           const std::vector<RecordPrediction>& preds) {
  std::ofstream out = open_out(path);
  out << "complex_id,mutations,ddg_hat,ddg_ba,dde,sampled_structure_path\n";
  for (const RecordPrediction& rp : preds) {
    out << rp.rec->pdb_id << ',' << mutations_csv(rp.rec->mutations) << ','
        << g17(rp.pred.ddg_hat) << ',' << g17(rp.pred.ddg_ba) << ','
        << g17(rp.pred.dde) << ',' << rp.sample_path << '\n';
  }
}

struct PredictionRow {
  std::string complex_id;
  std::string mutations;
  double ddg_hat = 0.0;
  double ddg_ba = 0.0;
  double dde = 0.0;
};

std::vector<PredictionRow> read_predictions_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open predictions: " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    throw IngestError(path.string() + ": empty predictions file");
  }
  if (line.rfind("complex_id,mutations,ddg_hat,ddg_ba,dde", 0) != 0) {
    throw IngestError(path.string() + ": unexpected predictions header");
  }
  std::vector<PredictionRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        fields.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur += c;
      }
    }
    fields.push_back(cur);
    if (fields.size() < 5) {
      throw IngestError(path.string() + ":" + std::to_string(lineno) +
                        ": expected at least 5 fields");
    }
    PredictionRow row;
    row.complex_id = fields[0];
    row.mutations = fields[1];
    try {
      row.ddg_hat = std::stod(fields[2]);
      row.ddg_ba = std::stod(fields[3]);
      row.dde = std::stod(fields[4]);
    } catch (const std::exception&) {
      throw IngestError(path.string() + ":" + std::to_string(lineno) +
                        ": bad numeric field");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// Restricts to the records whose split key is in `keys`; nullptr = all.
std::vector<std::size_t> record_indices(const Dataset& ds,
                                        const std::vector<std::string>* keys) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < ds.table.records.size(); ++i) {
    if (keys == nullptr ||
        std::find(keys->begin(), keys->end(), ds.table.records[i].split_key) !=
            keys->end()) {
      idx.push_back(i);
    }
  }
  return idx;
}

MetricReport metrics_for(const Dataset& ds, const std::vector<std::size_t>& idx,
                         const std::vector<RecordPrediction>& preds) {
  std::vector<std::string> keys;
  std::vector<double> p, t;
  for (std::size_t j = 0; j < idx.size(); ++j) {
    keys.push_back(ds.table.records[idx[j]].split_key);
    p.push_back(preds[j].pred.ddg_hat);
    t.push_back(ds.table.records[idx[j]].ddg_label);
  }
  return compute_metrics(keys, p, t);
}

// ---------------------------------------------------------------- commands

int cmd_ingest(const CommonFlags& flags) {
  RunConfig cfg = effective_config(flags);
  require_fields(cfg, {"structures_dir", "skempi_csv", "out_dir"});
  RunDir run(cfg, "ingest");

  const Dataset ds = load_dataset(cfg);
  nlohmann::json j;
  j["n_records"] = ds.table.records.size();
  j["n_complexes"] = ds.complexes.size();
  j["dropped_missing_ddg"] = ds.table.dropped_missing_ddg;
  nlohmann::json per;
  for (const auto& [pdb_id, cx] : ds.complexes) {
    std::size_t n_records = 0;
    for (const auto& rec : ds.table.records) {
      if (rec.pdb_id == pdb_id) ++n_records;
    }
    per.push_back({{"pdb_id", pdb_id},
                   {"n_chains", cx.chains.size()},
                   {"n_residues", cx.residue_count()},
                   {"n_records", n_records}});
  }
  j["complexes"] = per;

  open_out(run.dir() / "summary.json") << j.dump(2) << "\n";
  emit_manifest(run, "ingest", cfg);
  const fs::path out = run.commit();
  std::cout << "ingest: " << ds.table.records.size() << " records, "
            << ds.complexes.size() << " complexes, "
            << ds.table.dropped_missing_ddg << " dropped (missing ddg) -> "
            << out.string() << "\n";
  return 0;
}

int cmd_pretrain(const CommonFlags& flags) {
  RunConfig cfg = effective_config(flags);
  require_fields(cfg, {"structures_dir", "skempi_csv", "out_dir"});
  RunDir run(cfg, "pretrain");

  const Dataset ds = load_dataset(cfg);
  std::vector<Neighborhood> examples;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < ds.table.records.size(); ++i) {
    const SkempiRecord& rec = ds.table.records[i];
    const std::string key = rec.pdb_id + ":" + mutations_to_string(rec.mutations);
    if (!seen.insert(key).second) continue;
    examples.push_back(
        select_neighborhood(*ds.record_cx[i], rec.mutations, cfg.dsm.k));
  }
  if (examples.empty()) throw IngestError("pretrain: no usable records");

  const DsmTrainResult result = dsm_pretrain(examples, cfg.model, cfg.dsm);

  EnergyModel model = result.model;
  std::vector<CheckpointEntry> entries = model_checkpoint_entries(model, "ref.");
  append_meta(entries, cfg.model);
  write_checkpoint(run.dir() / "ref_model.ckpt", entries);

  {
    std::ofstream out = open_out(run.dir() / "loss_log.csv");
    out << "step,loss\n";
    for (std::size_t s = 0; s < result.loss_log.size(); ++s) {
      out << s << ',' << g17(result.loss_log[s]) << '\n';
    }
  }
  emit_manifest(run, "pretrain", cfg);
  const fs::path out = run.commit();
  std::cout << "pretrain: " << examples.size() << " neighborhoods, "
            << result.steps_done << " steps";
  if (!result.loss_log.empty()) {
    std::cout << ", loss " << g17(result.loss_log.front()) << " -> "
              << g17(result.loss_log.back());
  }
  if (result.diverged) std::cout << " (diverged, kept last finite step)";
  std::cout << " -> " << out.string() << "\n";
  return result.diverged ? 4 : 0;
}

int cmd_train(const CommonFlags& flags) {
  RunConfig cfg = effective_config(flags);
  require_fields(cfg,
                 {"structures_dir", "skempi_csv", "logprob_file", "checkpoint",
                  "out_dir"});
  if (cfg.train.train_provider) {
    throw ConfigError(
        "train.train_provider: cmd_train supports only the frozen "
        "file-backed provider; set it to false");
  }
  RunDir run(cfg, "train");

  const Dataset ds = load_dataset(cfg);
  const FileLogProbProvider provider =
      FileLogProbProvider::from_csv(fs::path(cfg.paths.logprob_file));
  const std::vector<CheckpointEntry> ref_entries =
      read_checkpoint(cfg.paths.checkpoint);
  check_meta(ref_entries, cfg.model, cfg.paths.checkpoint);
  const EnergyModel ref = load_model_from(ref_entries, cfg.model, "ref.");

  const FoldPlan folds =
      make_folds(ds.table.records, cfg.folds.n_folds, cfg.folds.val_frac,
                 cfg.seed);
  write_fold_plan_csv(run.dir() / "folds.csv", folds);

  for (int f = 0; f < folds.n_folds; ++f) {
    if (cfg.folds.fold >= 0 && f != cfg.folds.fold) continue;

    TrainDdgInputs in;
    in.provider = &provider;
    in.ref_model = &ref;
    std::vector<std::size_t> test_idx;
    for (std::size_t i = 0; i < ds.table.records.size(); ++i) {
      const std::string role =
          folds.role_in_fold(ds.table.records[i].split_key, f);
      if (role == "test") {
        test_idx.push_back(i);
      } else if (role == "val") {
        in.val.push_back(&ds.table.records[i]);
        in.val_cx.push_back(ds.record_cx[i]);
      } else {
        in.train.push_back(&ds.table.records[i]);
        in.train_cx.push_back(ds.record_cx[i]);
      }
    }

    DdgHead head;
    head.beta_kl = cfg.train.beta_kl;
    const TrainDdgResult result = train_ddg(in, ref, head, cfg.train);

    const fs::path fold_dir = run.dir() / ("fold" + std::to_string(f));
    fs::create_directories(fold_dir);

    EnergyModel trained = result.model;
    EnergyModel ref_copy = ref;
    std::vector<CheckpointEntry> entries =
        model_checkpoint_entries(trained, "energy.");
    const std::vector<CheckpointEntry> refs =
        model_checkpoint_entries(ref_copy, "ref.");
    entries.insert(entries.end(), refs.begin(), refs.end());
    const std::vector<CheckpointEntry> heads =
        head_checkpoint_entries(result.head);
    entries.insert(entries.end(), heads.begin(), heads.end());
    append_meta(entries, cfg.model);
    write_checkpoint(fold_dir / "model.ckpt", entries);

    {
      std::ofstream out = open_out(fold_dir / "train_log.csv");
      out << "epoch,train_mse,val_mse,kl,k_BT,s,b\n";
      for (const DdgEpochLog& e : result.epochs) {
        out << e.epoch << ',' << g17(e.train_mse) << ',' << g17(e.val_mse)
            << ',' << g17(e.kl) << ',' << g17(e.kbt) << ',' << g17(e.scale)
            << ',' << g17(e.bias) << '\n';
      }
    }

    const fs::path samples_dir = fold_dir / "samples";
    fs::create_directories(samples_dir);
    const std::vector<RecordPrediction> preds = predict_records(
        ds, test_idx, provider, ref, result.model, result.head, cfg,
        &samples_dir, &fold_dir);
    write_predictions_csv(fold_dir / "predictions.csv", preds);
    open_out(fold_dir / "metrics.json") << to_json(metrics_for(ds, test_idx, preds));

    std::cout << "train fold " << f << ": " << in.train.size() << " train / "
              << in.val.size() << " val / " << test_idx.size() << " test, "
              << result.steps_done << " steps, best val mse "
              << g17(result.best_val_mse)
              << (result.diverged ? " (diverged, restored best)" : "") << "\n";
  }

  emit_manifest(run, "train", cfg);
  const fs::path out = run.commit();
  std::cout << "train -> " << out.string() << "\n";
  return 0;
}

int cmd_predict(const CommonFlags& flags) {
  RunConfig cfg = effective_config(flags);
  require_fields(cfg,
                 {"structures_dir", "skempi_csv", "logprob_file", "checkpoint",
                  "out_dir"});
  RunDir run(cfg, "predict");

  const Dataset ds = load_dataset(cfg);
  const FileLogProbProvider provider =
      FileLogProbProvider::from_csv(fs::path(cfg.paths.logprob_file));
  const std::vector<CheckpointEntry> entries =
      read_checkpoint(cfg.paths.checkpoint);
  check_meta(entries, cfg.model, cfg.paths.checkpoint);
  const EnergyModel ref = load_model_from(entries, cfg.model, "ref.");
  const EnergyModel trained = has_prefix(entries, "energy.")
                                  ? load_model_from(entries, cfg.model, "energy.")
                                  : ref;
  const DdgHead head = load_head_from(entries, cfg.train.beta_kl);

  std::vector<std::size_t> idx;
  if (cfg.folds.fold >= 0) {
    const FoldPlan folds = make_folds(ds.table.records, cfg.folds.n_folds,
                                      cfg.folds.val_frac, cfg.seed);
    idx = record_indices(
        ds, &folds.test_keys[static_cast<std::size_t>(cfg.folds.fold)]);
  } else {
    idx = record_indices(ds, nullptr);
  }

  const fs::path samples_dir = run.dir() / "samples";
  fs::create_directories(samples_dir);
  const fs::path root = run.dir();
  const std::vector<RecordPrediction> preds = predict_records(
      ds, idx, provider, ref, trained, head, cfg, &samples_dir, &root);
  write_predictions_csv(run.dir() / "predictions.csv", preds);

  emit_manifest(run, "predict", cfg);
  const fs::path out = run.commit();
  std::cout << "predict: " << preds.size() << " records -> " << out.string()
            << "\n";
  return 0;
}

int cmd_evaluate(const CommonFlags& flags, const std::string& preds_path) {
  RunConfig cfg = effective_config(flags);
  require_fields(cfg, {"skempi_csv", "out_dir"});
  if (!fs::exists(preds_path)) {
    throw IoError("predictions file does not exist: " + preds_path);
  }
  RunDir run(cfg, "evaluate");

  const SkempiTable table = parse_skempi_table(fs::path(cfg.paths.skempi_csv));
  std::vector<const SkempiRecord*> records;
  if (cfg.folds.fold >= 0) {
    const FoldPlan folds = make_folds(table.records, cfg.folds.n_folds,
                                      cfg.folds.val_frac, cfg.seed);
    const auto& keys =
        folds.test_keys[static_cast<std::size_t>(cfg.folds.fold)];
    for (const auto& rec : table.records) {
      if (std::find(keys.begin(), keys.end(), rec.split_key) != keys.end()) {
        records.push_back(&rec);
      }
    }
  } else {
    for (const auto& rec : table.records) records.push_back(&rec);
  }

  const std::vector<PredictionRow> rows = read_predictions_csv(preds_path);
  if (rows.size() != records.size()) {
    throw IngestError("predictions have " + std::to_string(rows.size()) +
                      " rows but the record table has " +
                      std::to_string(records.size()));
  }
  std::vector<std::string> keys;
  std::vector<double> p, t;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].complex_id != records[i]->pdb_id ||
        rows[i].mutations != mutations_csv(records[i]->mutations)) {
      throw IngestError("prediction row " + std::to_string(i + 1) + " (" +
                        rows[i].complex_id + " " + rows[i].mutations +
                        ") does not match record " + records[i]->pdb_id + " " +
                        mutations_csv(records[i]->mutations));
    }
    keys.push_back(records[i]->split_key);
    p.push_back(rows[i].ddg_hat);
    t.push_back(records[i]->ddg_label);
  }

  const MetricReport report = compute_metrics(keys, p, t);
  open_out(run.dir() / "metrics.json") << to_json(report);
  emit_manifest(run, "evaluate", cfg);
  const fs::path out = run.commit();
  std::cout << "evaluate: " << report.n_records << " records"
            << (report.pearson ? ", pearson " + g17(*report.pearson) : "")
            << ", rmse " << g17(report.rmse) << " -> " << out.string() << "\n";
  return 0;
}

int cmd_rank(const CommonFlags& flags, const std::string& preds_path) {
  RunConfig cfg = effective_config(flags);
  require_fields(cfg, {"out_dir"});
  if (!fs::exists(preds_path)) {
    throw IoError("predictions file does not exist: " + preds_path);
  }
  RunDir run(cfg, "rank");

  const std::vector<PredictionRow> rows = read_predictions_csv(preds_path);
  std::vector<double> preds;
  for (const auto& row : rows) preds.push_back(row.ddg_hat);
  const std::vector<RankedMutation> ranked = rank_mutations(preds);

  {
    std::ofstream out = open_out(run.dir() / "ranking.csv");
    out << "complex_id,mutations,ddg_hat,rank,rank_percent\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      char pct[16];
      std::snprintf(pct, sizeof pct, "%.2f", ranked[i].rank_percent);
      out << rows[i].complex_id << ',' << rows[i].mutations << ','
          << g17(rows[i].ddg_hat) << ',' << g17(ranked[i].rank) << ',' << pct
          << '\n';
    }
  }
  emit_manifest(run, "rank", cfg);
  const fs::path out = run.commit();
  std::cout << "rank: " << rows.size() << " candidates -> " << out.string()
            << "\n";
  return 0;
}

int cmd_gradcheck(const CommonFlags& flags) {
  RunConfig cfg = effective_config(flags);
  require_fields(cfg, {"out_dir"});
  RunDir run(cfg, "gradcheck");

  const double tol = 1e-5;
  struct Check {
    std::string name;
    GradCheckReport report;
  };
  std::vector<Check> checks;

  // Small model over a small synthetic neighborhood keeps the finite
  // differences fast and well-conditioned.
  EnergyModelConfig mc;
  mc.embed_dim = 8;
  mc.encoder_hidden = 16;
  mc.interaction_hidden = 16;
  mc.rbf.n_rbf = 8;
  Rng rng(cfg.seed + 17);
  EnergyModel model = init_energy_model(mc, rng);

  SyntheticSpec spec;
  spec.n_binder = 3;
  spec.n_target = 3;
  spec.seed = cfg.seed + 1;
  const Complex cx = make_synthetic_complex(spec);
  MutationSet muts(1);
  muts[0].wt_aa = cx.chains[0].residues[1].aa_type;
  muts[0].chain_id = cx.chains[0].residues[1].chain_id;
  muts[0].seq_index = cx.chains[0].residues[1].seq_index;
  muts[0].mut_aa = muts[0].wt_aa == 1 ? 2 : 1;
  const Neighborhood neigh = select_neighborhood(cx, muts, 8);
  const EnergyInput input = make_energy_input(neigh);

  {  // d energy / d coordinates == reverse-mode score
    std::vector<double> x0;
    for (const auto& p : neigh.coords()) {
      x0.push_back(p.x());
      x0.push_back(p.y());
      x0.push_back(p.z());
    }
    auto f = [&](std::span<const double> x) {
      EnergyInput in = input;
      for (std::size_t i = 0; i < in.coords.size(); ++i) {
        in.coords[i] = Eigen::Vector3d(x[3 * i], x[3 * i + 1], x[3 * i + 2]);
      }
      EnergyEval ev;
      return energy_eval(model, in, ev);
    };
    EnergyEval ev;
    energy_eval(model, input, ev);
    std::vector<Eigen::Vector3d> grad;
    energy_coord_grad(model, input, ev, 1.0, grad);
    std::vector<double> analytic;
    for (const auto& g : grad) {
      analytic.push_back(g.x());
      analytic.push_back(g.y());
      analytic.push_back(g.z());
    }
    checks.push_back(
        {"energy_coordinate_gradient",
         finite_diff_check(f, x0, analytic, 1e-5, tol)});
  }

  {  // d energy / d parameters
    EnergyGrads grads;
    grads.init_like(model);
    ParamSet params;
    bind_energy_params(model, grads, params);
    const std::vector<double> theta0 = params.flatten_values();
    auto f = [&](std::span<const double> theta) {
      params.set_values(theta);
      EnergyEval ev;
      const double e = energy_eval(model, input, ev);
      params.set_values(theta0);
      return e;
    };
    params.zero_grads();
    EnergyEval ev;
    energy_eval(model, input, ev);
    energy_param_grad(model, input, ev, 1.0, grads);
    checks.push_back({"energy_parameter_gradient",
                      finite_diff_check(f, theta0, params.flatten_grads(),
                                        1e-5, tol)});
  }

  {  // d dsm loss / d parameters
    Rng noise_rng(cfg.seed + 2);
    const DsmBatch batch = make_dsm_batch(neigh, cfg.dsm.sigma, noise_rng);
    EnergyGrads grads;
    grads.init_like(model);
    ParamSet params;
    bind_energy_params(model, grads, params);
    const std::vector<double> theta0 = params.flatten_values();
    auto f = [&](std::span<const double> theta) {
      params.set_values(theta);
      const double loss = dsm_loss(model, batch, cfg.dsm.sigma);
      params.set_values(theta0);
      return loss;
    };
    params.zero_grads();
    dsm_loss_grad(model, batch, cfg.dsm.sigma, grads);
    // The loss carries a large additive constant (the squared noise
    // target), so central differences hit their round-off floor near
    // h = 1e-3; the raised rel_floor keeps near-zero encoder gradients
    // from being judged by that noise while every coordinate above 1%
    // of the gradient scale still gets a true relative comparison.
    checks.push_back({"score_matching_parameter_gradient",
                      finite_diff_check(f, theta0, params.flatten_grads(),
                                        1e-3, tol, 1e-2)});
  }

  {  // d squared-residual / d head parameters, fixed components
    const double ba_unit = 0.7, dde = -0.4, label = 1.3;
    DdgHead head;
    std::vector<double> h0 = {head.log_kbt, head.scale, head.bias};
    auto f = [&](std::span<const double> h) {
      const double kbt = std::exp(h[0]);
      const double pred = -kbt * ba_unit - (h[1] * dde + h[2]);
      const double r = pred - label;
      return r * r;
    };
    const double kbt = std::exp(h0[0]);
    const double ddg_ba = -kbt * ba_unit;
    const double pred = ddg_ba - (h0[1] * dde + h0[2]);
    const double up = 2.0 * (pred - label);
    const std::vector<double> analytic = {up * ddg_ba, -up * dde, -up};
    checks.push_back(
        {"head_gradient", finite_diff_check(f, h0, analytic, 1e-6, tol)});
  }

  bool all_pass = true;
  nlohmann::json j;
  nlohmann::json arr = nlohmann::json::array();
  for (const Check& c : checks) {
    all_pass = all_pass && c.report.pass;
    arr.push_back({{"name", c.name},
                   {"pass", c.report.pass},
                   {"max_rel_error", c.report.max_rel_error},
                   {"worst_index", c.report.worst_index}});
    std::cout << "gradcheck " << c.name << ": "
              << (c.report.pass ? "pass" : "FAIL") << " (max rel err "
              << g17(c.report.max_rel_error) << ")\n";
  }
  j["checks"] = arr;
  j["all_pass"] = all_pass;
  j["tolerance"] = tol;
  open_out(run.dir() / "gradcheck.json") << j.dump(2) << "\n";
  emit_manifest(run, "gradcheck", cfg);
  const fs::path out = run.commit();
  std::cout << "gradcheck -> " << out.string() << "\n";
  if (!all_pass) throw NumericError("gradient checks failed");
  return 0;
}

int cmd_sample(const CommonFlags& flags, int record_index) {
  RunConfig cfg = effective_config(flags);
  require_fields(cfg,
                 {"structures_dir", "skempi_csv", "checkpoint", "out_dir"});
  RunDir run(cfg, "sample");

  const Dataset ds = load_dataset(cfg);
  if (record_index < 0 ||
      static_cast<std::size_t>(record_index) >= ds.table.records.size()) {
    throw ConfigError("record index " + std::to_string(record_index) +
                      " out of range (have " +
                      std::to_string(ds.table.records.size()) + " records)");
  }
  const SkempiRecord& rec =
      ds.table.records[static_cast<std::size_t>(record_index)];
  const std::vector<CheckpointEntry> entries =
      read_checkpoint(cfg.paths.checkpoint);
  check_meta(entries, cfg.model, cfg.paths.checkpoint);
  const EnergyModel ref = load_model_from(entries, cfg.model, "ref.");

  const Complex mut_cx = apply_mutation_set(
      *ds.record_cx[static_cast<std::size_t>(record_index)], rec.mutations);
  const Neighborhood neigh =
      select_neighborhood(mut_cx, rec.mutations, cfg.k_neighborhood);
  LangevinConfig lcfg = cfg.langevin;
  lcfg.seed = record_plan_seed(cfg.seed, rec);
  const SampleResult result = langevin_sample(neigh, ref, lcfg);

  write_trajectory_csv(run.dir() / "trajectory.csv", neigh, result.trajectory);
  write_sample_csv(run.dir() / "final_coords.csv", neigh, result.coords);
  emit_manifest(run, "sample", cfg);
  const fs::path out = run.commit();
  std::cout << "sample: record " << record_index << " (" << rec.pdb_id << " "
            << mutations_csv(rec.mutations) << "), " << lcfg.steps
            << " steps -> " << out.string() << "\n";
  return 0;
}

int cmd_sweep(const CommonFlags& flags, std::vector<int> t_values) {
  RunConfig cfg = effective_config(flags);
  require_fields(cfg,
                 {"structures_dir", "skempi_csv", "logprob_file", "checkpoint",
                  "out_dir"});
  if (t_values.empty()) t_values = {1, 5, 10, 100};
  RunDir run(cfg, "sweep");

  const Dataset ds = load_dataset(cfg);
  const FileLogProbProvider provider =
      FileLogProbProvider::from_csv(fs::path(cfg.paths.logprob_file));
  const std::vector<CheckpointEntry> entries =
      read_checkpoint(cfg.paths.checkpoint);
  check_meta(entries, cfg.model, cfg.paths.checkpoint);
  const EnergyModel ref = load_model_from(entries, cfg.model, "ref.");
  const EnergyModel trained = has_prefix(entries, "energy.")
                                  ? load_model_from(entries, cfg.model, "energy.")
                                  : ref;
  const DdgHead head = load_head_from(entries, cfg.train.beta_kl);
  const std::vector<std::size_t> idx = record_indices(ds, nullptr);

  std::ofstream out = open_out(run.dir() / "sweep.csv");
  out << "steps,pearson,spearman,rmse,mae,auroc,n_records\n";
  auto cell = [](const std::optional<double>& v) {
    return v ? g17(*v) : std::string();
  };
  for (const int t : t_values) {
    RunConfig cfg_t = cfg;
    cfg_t.langevin.steps = t;
    wire_config(cfg_t);
    const std::vector<RecordPrediction> preds = predict_records(
        ds, idx, provider, ref, trained, head, cfg_t, nullptr, nullptr);
    const MetricReport report = metrics_for(ds, idx, preds);
    out << t << ',' << cell(report.pearson) << ',' << cell(report.spearman)
        << ',' << g17(report.rmse) << ',' << g17(report.mae) << ','
        << cell(report.auroc) << ',' << report.n_records << '\n';
    std::cout << "sweep steps=" << t << ": rmse " << g17(report.rmse) << "\n";
  }
  out.close();

  emit_manifest(run, "sweep", cfg);
  const fs::path outdir = run.commit();
  std::cout << "sweep -> " << outdir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ddg prediction pipeline"};
  app.set_version_flag("--version", DDGKIT_VERSION);
  app.require_subcommand(1);
  app.fallthrough();

  CommonFlags flags;
  app.add_option("--config", flags.config_path, "JSON config file");
  app.add_option("--seed", flags.seed, "override config seed");
  app.add_option("--fold", flags.fold, "restrict to one CV fold");
  app.add_option("--out", flags.out_dir, "override output directory");
  app.add_option("--steps", flags.steps, "override Langevin step count T");
  app.add_option("--logprob-file", flags.logprob_file,
                 "override the precomputed log-probability table");

  auto* ingest = app.add_subcommand("ingest", "parse and summarize a dataset");
  auto* pretrain =
      app.add_subcommand("pretrain", "denoising pretraining of the reference model");
  auto* train = app.add_subcommand("train", "supervised training per CV fold");
  auto* predict = app.add_subcommand("predict", "predict ddg for all records");

  std::string preds_path;
  auto* evaluate = app.add_subcommand("evaluate", "score predictions against labels");
  evaluate->add_option("predictions", preds_path, "predictions CSV")->required();
  auto* rank = app.add_subcommand("rank", "rank candidates by predicted ddg");
  rank->add_option("predictions", preds_path, "predictions CSV")->required();

  auto* gradcheck =
      app.add_subcommand("gradcheck", "finite-difference gradient self-check");

  int record_index = 0;
  auto* sample = app.add_subcommand("sample", "sample one record's mutant structure");
  sample->add_option("record", record_index, "record index in the table")
      ->required();

  std::vector<int> t_values;
  auto* sweep = app.add_subcommand("sweep", "metrics vs Langevin step count");
  sweep->add_option("--t-list", t_values,
                    "step counts to sweep (default 1 5 10 100)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(ingest)) return cmd_ingest(flags);
    if (app.got_subcommand(pretrain)) return cmd_pretrain(flags);
    if (app.got_subcommand(train)) return cmd_train(flags);
    if (app.got_subcommand(predict)) return cmd_predict(flags);
    if (app.got_subcommand(evaluate)) return cmd_evaluate(flags, preds_path);
    if (app.got_subcommand(rank)) return cmd_rank(flags, preds_path);
    if (app.got_subcommand(gradcheck)) return cmd_gradcheck(flags);
    if (app.got_subcommand(sample)) return cmd_sample(flags, record_index);
    if (app.got_subcommand(sweep)) return cmd_sweep(flags, t_values);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IngestError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
