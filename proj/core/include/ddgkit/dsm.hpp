#pragma once

#include <cmath>
#include <vector>

#include "ddgkit/energy.hpp"
#include "ddgkit/geometry.hpp"
#include "ddgkit/rng.hpp"

namespace ddgkit {

struct DsmConfig {
  double sigma = std::sqrt(0.1);  // perturbation std dev, Angstrom
  int steps = 500;
  double lr = 1e-4;
  std::uint64_t seed = 0;
  int k = 8;  // neighborhood size when batches are built from complexes
};

// One denoising example: clean coordinates, the recorded noise draw,
// and the perturbed coordinates the model is evaluated at.
struct DsmBatch {
  const Neighborhood* neigh = nullptr;
  std::vector<Eigen::Vector3d> clean;
  std::vector<Eigen::Vector3d> noise;
  std::vector<Eigen::Vector3d> noisy;
};

// Perturbs every backbone atom of the neighborhood with iid N(0, sigma^2)
// noise per scalar coordinate (drawn in atom order, x/y/z).
DsmBatch make_dsm_batch(const Neighborhood& neigh, double sigma, Rng& rng);

// Mean over scalar coordinates of (dE/dX(noisy) - noise/sigma^2)^2.
double dsm_loss(const EnergyModel& model, const DsmBatch& batch, double sigma);

// Same objective for an explicit score field; used to reason about the
// objective independently of any model (e.g. its minimizer under
// scaling of the energy).
double dsm_loss_from_score(const std::vector<Eigen::Vector3d>& score,
                           const std::vector<Eigen::Vector3d>& noise,
                           double sigma);

// Loss plus exact parameter gradients (accumulated into grads). The
// weighting of the score residual is frozen per evaluation, which is the
// exact product-rule gradient of the squared residual.
double dsm_loss_grad(const EnergyModel& model, const DsmBatch& batch,
                     double sigma, EnergyGrads& grads);

struct DsmTrainResult {
  EnergyModel model;
  std::vector<double> loss_log;  // loss per step, before that step's update
  bool diverged = false;
  int steps_done = 0;
};

// Adam training over examples visited round-robin, one batch per step,
// fresh noise each step. Deterministic for a fixed config. On a
// non-finite loss the previous parameters are returned with
// diverged = true.
DsmTrainResult dsm_pretrain(const std::vector<Neighborhood>& examples,
                            const EnergyModelConfig& model_cfg,
                            const DsmConfig& cfg);

}  // namespace ddgkit
