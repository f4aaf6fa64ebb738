#include "ddgkit/config.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ddgkit/error.hpp"
#include "ddgkit/hash.hpp"

namespace ddgkit {

namespace {

using nlohmann::json;

// Collects every problem instead of bailing at the first, so one failed
// run reports the full list of offending fields.
struct Issues {
  std::vector<std::string> list;

  void add(const std::string& what) { list.push_back(what); }
  void raise_if_any(const std::string& source) const {
    if (list.empty()) return;
    std::string msg = source + ": invalid config:";
    for (const auto& item : list) msg += "\n  - " + item;
    throw ConfigError(msg);
  }
};

class Section {
 public:
  Section(const json& j, std::string prefix, Issues& issues)
      : j_(j), prefix_(std::move(prefix)), issues_(issues) {
    if (!j_.is_object()) {
      issues_.add(prefix_.empty() ? "top level must be a JSON object"
                                  : prefix_ + ": must be a JSON object");
      ok_ = false;
    }
  }

  ~Section() {
    if (!ok_) return;
    for (const auto& [key, value] : j_.items()) {
      (void)value;
      if (touched_.count(key) == 0) {
        issues_.add(path(key) + ": unknown field");
      }
    }
  }

  bool has(const std::string& key) {
    if (!ok_) return false;
    touched_.insert(key);
    return j_.contains(key);
  }

  const json* get(const std::string& key) {
    return has(key) ? &j_.at(key) : nullptr;
  }

  template <typename T>
  void number(const std::string& key, T& out) {
    const json* v = get(key);
    if (v == nullptr) return;
    if (!v->is_number()) {
      issues_.add(path(key) + ": expected a number");
      return;
    }
    out = v->get<T>();
  }

  void integer(const std::string& key, int& out) {
    const json* v = get(key);
    if (v == nullptr) return;
    if (!v->is_number_integer()) {
      issues_.add(path(key) + ": expected an integer");
      return;
    }
    out = v->get<int>();
  }

  void unsigned64(const std::string& key, std::uint64_t& out) {
    const json* v = get(key);
    if (v == nullptr) return;
    if (!v->is_number_unsigned() && !v->is_number_integer()) {
      issues_.add(path(key) + ": expected a non-negative integer");
      return;
    }
    if (v->is_number_integer() && v->get<std::int64_t>() < 0) {
      issues_.add(path(key) + ": expected a non-negative integer");
      return;
    }
    out = v->get<std::uint64_t>();
  }

  void boolean(const std::string& key, bool& out) {
    const json* v = get(key);
    if (v == nullptr) return;
    if (!v->is_boolean()) {
      issues_.add(path(key) + ": expected a boolean");
      return;
    }
    out = v->get<bool>();
  }

  void text(const std::string& key, std::string& out) {
    const json* v = get(key);
    if (v == nullptr) return;
    if (!v->is_string()) {
      issues_.add(path(key) + ": expected a string");
      return;
    }
    out = v->get<std::string>();
  }

  std::string path(const std::string& key) const {
    return prefix_.empty() ? key : prefix_ + "." + key;
  }

  const json& raw() const { return j_; }
  bool ok() const { return ok_; }
  Issues& issues() { return issues_; }

 private:
  const json& j_;
  std::string prefix_;
  Issues& issues_;
  std::set<std::string> touched_;
  bool ok_ = true;
};

}  // namespace

RunConfig parse_config_json(const std::string& text,
                            const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": " + e.what());
  }

  RunConfig cfg;
  Issues issues;
  {
    Section top(j, "", issues);
    if (top.ok()) {
      if (const json* v = top.get("paths")) {
        Section s(*v, "paths", issues);
        if (s.ok()) {
          s.text("structures_dir", cfg.paths.structures_dir);
          s.text("skempi_csv", cfg.paths.skempi_csv);
          s.text("logprob_file", cfg.paths.logprob_file);
          s.text("checkpoint", cfg.paths.checkpoint);
          s.text("out_dir", cfg.paths.out_dir);
        }
      }
      if (const json* v = top.get("model")) {
        Section s(*v, "model", issues);
        if (s.ok()) {
          s.integer("embed_dim", cfg.model.embed_dim);
          s.integer("encoder_hidden", cfg.model.encoder_hidden);
          s.integer("interaction_hidden", cfg.model.interaction_hidden);
          s.integer("n_rbf", cfg.model.rbf.n_rbf);
          s.number("r_max", cfg.model.rbf.r_max);
        }
      }
      top.integer("k_neighborhood", cfg.k_neighborhood);
      if (const json* v = top.get("dsm")) {
        Section s(*v, "dsm", issues);
        if (s.ok()) {
          double sigma2 = cfg.dsm.sigma * cfg.dsm.sigma;
          s.number("sigma2", sigma2);
          if (sigma2 > 0.0) cfg.dsm.sigma = std::sqrt(sigma2);
          else if (s.raw().contains("sigma2"))
            s.issues().add("dsm.sigma2: must be positive");
          s.integer("steps", cfg.dsm.steps);
          s.number("lr", cfg.dsm.lr);
          s.integer("k", cfg.dsm.k);
        }
      }
      if (const json* v = top.get("langevin")) {
        Section s(*v, "langevin", issues);
        if (s.ok()) {
          s.integer("steps", cfg.langevin.steps);
          s.number("alpha0", cfg.langevin.alpha0);
          s.number("eta0", cfg.langevin.eta0);
          s.number("sigma2_prior", cfg.langevin.sigma2_prior);
          s.boolean("anneal", cfg.langevin.anneal);
        }
      }
      if (const json* v = top.get("train")) {
        Section s(*v, "train", issues);
        if (s.ok()) {
          s.number("lr", cfg.train.lr);
          s.integer("batch_size", cfg.train.batch_size);
          s.integer("max_steps", cfg.train.max_steps);
          s.integer("patience", cfg.train.patience);
          s.number("beta_kl", cfg.train.beta_kl);
          s.boolean("train_provider", cfg.train.train_provider);
        }
      }
      if (const json* v = top.get("folds")) {
        Section s(*v, "folds", issues);
        if (s.ok()) {
          s.integer("n_folds", cfg.folds.n_folds);
          s.number("val_frac", cfg.folds.val_frac);
          s.integer("fold", cfg.folds.fold);
        }
      }
      top.unsigned64("seed", cfg.seed);
    }
  }
  issues.raise_if_any(source);
  wire_config(cfg);
  return cfg;
}

void wire_config(RunConfig& cfg) {
  cfg.dsm.seed = cfg.seed;
  cfg.langevin.seed = cfg.seed;
  cfg.train.seed = cfg.seed;
  cfg.train.langevin = cfg.langevin;
  cfg.train.k_neighborhood = cfg.k_neighborhood;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_json(buf.str(), path.string());
}

std::string config_to_json(const RunConfig& cfg) {
  json j;
  j["paths"] = {{"structures_dir", cfg.paths.structures_dir},
                {"skempi_csv", cfg.paths.skempi_csv},
                {"logprob_file", cfg.paths.logprob_file},
                {"checkpoint", cfg.paths.checkpoint},
                {"out_dir", cfg.paths.out_dir}};
  j["model"] = {{"embed_dim", cfg.model.embed_dim},
                {"encoder_hidden", cfg.model.encoder_hidden},
                {"interaction_hidden", cfg.model.interaction_hidden},
                {"n_rbf", cfg.model.rbf.n_rbf},
                {"r_max", cfg.model.rbf.r_max}};
  j["k_neighborhood"] = cfg.k_neighborhood;
  j["dsm"] = {{"sigma2", cfg.dsm.sigma * cfg.dsm.sigma},
              {"steps", cfg.dsm.steps},
              {"lr", cfg.dsm.lr},
              {"k", cfg.dsm.k}};
  j["langevin"] = {{"steps", cfg.langevin.steps},
                   {"alpha0", cfg.langevin.alpha0},
                   {"eta0", cfg.langevin.eta0},
                   {"sigma2_prior", cfg.langevin.sigma2_prior},
                   {"anneal", cfg.langevin.anneal}};
  j["train"] = {{"lr", cfg.train.lr},
                {"batch_size", cfg.train.batch_size},
                {"max_steps", cfg.train.max_steps},
                {"patience", cfg.train.patience},
                {"beta_kl", cfg.train.beta_kl},
                {"train_provider", cfg.train.train_provider}};
  j["folds"] = {{"n_folds", cfg.folds.n_folds},
                {"val_frac", cfg.folds.val_frac},
                {"fold", cfg.folds.fold}};
  j["seed"] = cfg.seed;
  return j.dump(2) + "\n";
}

std::uint64_t config_hash(const RunConfig& cfg) {
  return fnv1a64(config_to_json(cfg));
}

std::string config_hash_hex(const RunConfig& cfg) {
  std::ostringstream oss;
  oss << std::hex << std::setw(16) << std::setfill('0') << config_hash(cfg);
  return oss.str();
}

std::vector<std::string> validate_config(
    const RunConfig& cfg, std::span<const std::string> required_paths) {
  std::vector<std::string> bad;

  for (const std::string& name : required_paths) {
    const std::string* value = nullptr;
    if (name == "structures_dir") value = &cfg.paths.structures_dir;
    else if (name == "skempi_csv") value = &cfg.paths.skempi_csv;
    else if (name == "logprob_file") value = &cfg.paths.logprob_file;
    else if (name == "checkpoint") value = &cfg.paths.checkpoint;
    else if (name == "out_dir") value = &cfg.paths.out_dir;
    if (value == nullptr) {
      bad.push_back("paths." + name + ": not a known path field");
      continue;
    }
    if (value->empty()) {
      bad.push_back("paths." + name + ": required but not set");
      continue;
    }
    // The output directory is created on demand; inputs must exist.
    if (name != "out_dir" && !std::filesystem::exists(*value)) {
      bad.push_back("paths." + name + ": does not exist: " + *value);
    }
  }

  if (cfg.model.embed_dim < 1) bad.push_back("model.embed_dim: must be >= 1");
  if (cfg.model.encoder_hidden < 1)
    bad.push_back("model.encoder_hidden: must be >= 1");
  if (cfg.model.interaction_hidden < 1)
    bad.push_back("model.interaction_hidden: must be >= 1");
  if (cfg.model.rbf.n_rbf < 2) bad.push_back("model.n_rbf: must be >= 2");
  if (!(cfg.model.rbf.r_max > 0.0))
    bad.push_back("model.r_max: must be positive");
  if (cfg.k_neighborhood < 0) bad.push_back("k_neighborhood: must be >= 0");
  if (!(cfg.dsm.sigma > 0.0)) bad.push_back("dsm.sigma2: must be positive");
  if (cfg.dsm.steps < 0) bad.push_back("dsm.steps: must be >= 0");
  if (!(cfg.dsm.lr > 0.0)) bad.push_back("dsm.lr: must be positive");
  if (cfg.dsm.k < 0) bad.push_back("dsm.k: must be >= 0");
  if (cfg.langevin.steps < 0) bad.push_back("langevin.steps: must be >= 0");
  if (cfg.langevin.alpha0 < 0.0)
    bad.push_back("langevin.alpha0: must be >= 0");
  if (cfg.langevin.eta0 < 0.0) bad.push_back("langevin.eta0: must be >= 0");
  if (!(cfg.langevin.sigma2_prior > 0.0))
    bad.push_back("langevin.sigma2_prior: must be positive");
  if (!(cfg.train.lr > 0.0)) bad.push_back("train.lr: must be positive");
  if (cfg.train.batch_size < 1)
    bad.push_back("train.batch_size: must be >= 1");
  if (cfg.train.max_steps < 0) bad.push_back("train.max_steps: must be >= 0");
  if (cfg.train.patience < 1) bad.push_back("train.patience: must be >= 1");
  if (cfg.train.beta_kl < 0.0) bad.push_back("train.beta_kl: must be >= 0");
  if (cfg.folds.n_folds < 2) bad.push_back("folds.n_folds: must be >= 2");
  if (!(cfg.folds.val_frac > 0.0) || cfg.folds.val_frac >= 1.0)
    bad.push_back("folds.val_frac: must be in (0, 1)");
  if (cfg.folds.fold < -1 || cfg.folds.fold >= cfg.folds.n_folds)
    bad.push_back("folds.fold: must be -1 or in [0, n_folds)");

  return bad;
}

}  // namespace ddgkit
