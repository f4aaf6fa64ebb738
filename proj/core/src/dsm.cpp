#include "ddgkit/dsm.hpp"

#include "ddgkit/error.hpp"

namespace ddgkit {

DsmBatch make_dsm_batch(const Neighborhood& neigh, double sigma, Rng& rng) {
  DsmBatch batch;
  batch.neigh = &neigh;
  batch.clean = neigh.coords();
  batch.noise.reserve(batch.clean.size());
  batch.noisy.reserve(batch.clean.size());
  for (const Eigen::Vector3d& x : batch.clean) {
    const Eigen::Vector3d eps(sigma * rng.normal(), sigma * rng.normal(),
                              sigma * rng.normal());
    batch.noise.push_back(eps);
    batch.noisy.push_back(x + eps);
  }
  return batch;
}

double dsm_loss_from_score(const std::vector<Eigen::Vector3d>& score,
                           const std::vector<Eigen::Vector3d>& noise,
                           double sigma) {
  if (score.size() != noise.size()) {
    throw NumericError("dsm_loss_from_score: layout mismatch");
  }
  const double inv_s2 = 1.0 / (sigma * sigma);
  double sum = 0.0;
  for (std::size_t i = 0; i < score.size(); ++i) {
    const Eigen::Vector3d r = score[i] - noise[i] * inv_s2;
    sum += r.squaredNorm();
  }
  const double n_coords = 3.0 * static_cast<double>(score.size());
  return sum / n_coords;
}

double dsm_loss(const EnergyModel& model, const DsmBatch& batch, double sigma) {
  const EnergyInput input = make_energy_input(*batch.neigh, &batch.noisy);
  EnergyEval eval;
  energy_eval(model, input, eval);
  std::vector<Eigen::Vector3d> score;
  energy_coord_grad(model, input, eval, 1.0, score);
  for (const auto& g : score) {
    if (!g.allFinite()) throw NumericError("dsm_loss: non-finite score");
  }
  return dsm_loss_from_score(score, batch.noise, sigma);
}

double dsm_loss_grad(const EnergyModel& model, const DsmBatch& batch,
                     double sigma, EnergyGrads& grads) {
  const EnergyInput input = make_energy_input(*batch.neigh, &batch.noisy);
  EnergyEval eval;
  energy_eval(model, input, eval);
  std::vector<Eigen::Vector3d> score;
  energy_coord_grad(model, input, eval, 1.0, score);
  for (const auto& g : score) {
    if (!g.allFinite()) throw NumericError("dsm_loss_grad: non-finite score");
  }
  const double loss = dsm_loss_from_score(score, batch.noise, sigma);

  // dL/d(score_i) = 2 (score_i - noise_i / sigma^2) / n_coords, and
  // score = dE/dX, so dL/dtheta = d<w, dE/dX>/dtheta with w frozen.
  const double inv_s2 = 1.0 / (sigma * sigma);
  const double n_coords = 3.0 * static_cast<double>(score.size());
  std::vector<Eigen::Vector3d> w(score.size());
  for (std::size_t i = 0; i < score.size(); ++i) {
    w[i] = 2.0 * (score[i] - batch.noise[i] * inv_s2) / n_coords;
  }
  EnergyDirTrace tangent;
  energy_dir_deriv(model, input, eval, w, tangent);
  energy_dir_param_grad(model, input, eval, tangent, 1.0, grads);
  return loss;
}

DsmTrainResult dsm_pretrain(const std::vector<Neighborhood>& examples,
                            const EnergyModelConfig& model_cfg,
                            const DsmConfig& cfg) {
  if (examples.empty()) {
    throw NumericError("dsm_pretrain: no training neighborhoods");
  }
  if (cfg.sigma <= 0.0) throw NumericError("dsm_pretrain: sigma must be > 0");

  Rng init_rng(cfg.seed);
  DsmTrainResult result;
  result.model = init_energy_model(model_cfg, init_rng);

  EnergyGrads grads;
  grads.init_like(result.model);
  ParamSet params;
  bind_energy_params(result.model, grads, params);
  AdamState adam;
  adam.init(params);
  AdamConfig adam_cfg;
  adam_cfg.lr = cfg.lr;

  // Separate stream for noise so changing `steps` does not reshuffle
  // the initialization draws.
  Rng noise_rng(cfg.seed + 0x9e3779b97f4a7c15ULL);
  std::vector<double> last_good = params.flatten_values();
  for (int step = 0; step < cfg.steps; ++step) {
    const Neighborhood& neigh =
        examples[static_cast<std::size_t>(step) % examples.size()];
    const DsmBatch batch = make_dsm_batch(neigh, cfg.sigma, noise_rng);
    params.zero_grads();
    double loss = 0.0;
    try {
      loss = dsm_loss_grad(result.model, batch, cfg.sigma, grads);
    } catch (const NumericError&) {
      loss = std::numeric_limits<double>::quiet_NaN();
    }
    if (!std::isfinite(loss)) {
      params.set_values(last_good);
      result.diverged = true;
      result.steps_done = step;
      return result;
    }
    result.loss_log.push_back(loss);
    last_good = params.flatten_values();
    adam_step(params, adam, adam_cfg);
    result.steps_done = step + 1;
  }
  return result;
}

}  // namespace ddgkit
