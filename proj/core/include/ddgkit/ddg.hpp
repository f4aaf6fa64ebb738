#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ddgkit/energy.hpp"
#include "ddgkit/sampler.hpp"
#include "ddgkit/seqmodel.hpp"
#include "ddgkit/types.hpp"

namespace ddgkit {

// Learnable combiner parameters. k_BT stays positive through the log
// parameterization; scale and bias act on the energy difference only.
struct DdgHead {
  double log_kbt = 0.0;
  double scale = 1.0;
  double bias = 0.0;
  double beta_kl = 1e-3;

  double kbt() const { return std::exp(log_kbt); }
};

// The four joint log-probabilities behind the binding-affinity term.
struct BaTerms {
  double bound_mut = 0.0;
  double unbound_mut = 0.0;
  double bound_wt = 0.0;
  double unbound_wt = 0.0;
};

// -kbt * [ (L_b^mut - L_u^mut) - (L_b^wt - L_u^wt) ]
double ddg_ba_value(const BaTerms& t, double kbt);

// Evaluates all four terms on the wild-type structure with one shared
// decoding order: bound terms on the full complex, unbound terms on the
// per-group restricted complexes.
BaTerms ba_terms(const LogProbProvider& provider, const Complex& wt_cx,
                 const MutationSet& muts, const DecodingPlan& plan);

struct FourEnergies {
  double bound_mut = 0.0;
  double unbound_mut = 0.0;
  double bound_wt = 0.0;
  double unbound_wt = 0.0;
};

// (E_b^mut - E_u^mut) - (E_b^wt - E_u^wt)
double dde_four_term(const FourEnergies& e);

// Separated chains never re-enter the energy, so the unbound terms are
// zero by convention and the difference collapses to two evaluations.
double dde_zero_unbound(double e_bound_mut, double e_bound_wt);

// Microstate multiplicities for the explicit-degeneracy form. Synthetic
// in tests; physical runs use 1 everywhere.
struct DegeneracyRatios {
  double bound_mut = 1.0;
  double unbound_mut = 1.0;
  double bound_wt = 1.0;
  double unbound_wt = 1.0;
};

// -kbt * ln( (omega_b^mut * omega_u^wt) / (omega_u^mut * omega_b^wt) )
double degeneracy_term(const DegeneracyRatios& omega, double kbt);

// Full three-part form: ddg_ba - dde + degeneracy correction. When the
// bound/unbound multiplicity ratio is the same for mutant and wild type
// the correction vanishes and this reduces to the two-term combination.
double ddg_full_form(double ddg_ba, double dde, const DegeneracyRatios& omega,
                     double kbt);

struct DdgPrediction {
  double ddg_hat = 0.0;
  double ddg_ba = 0.0;
  double dde = 0.0;
  BaTerms ba;
  bool degenerate = false;  // empty mutation set: prediction is -bias
  // Mutant-side neighborhood and its sampled coordinates (layout of
  // Neighborhood::coords); empty for degenerate predictions.
  std::vector<Eigen::Vector3d> sampled_coords;
};

struct PredictInputs {
  const Complex* wt_cx = nullptr;
  const MutationSet* muts = nullptr;
  const LogProbProvider* provider = nullptr;
  const EnergyModel* ref_model = nullptr;    // frozen; drives sampling
  const EnergyModel* trainable = nullptr;    // scores the energy difference
  const DdgHead* head = nullptr;
  LangevinConfig langevin;
  int k_neighborhood = 8;
  std::uint64_t plan_seed = 0;
};

// ddg_hat = ddg_ba - (scale * dde + bias). Mutant coordinates come from
// the sampler unless `mut_coords` is supplied; `wt_coords` overrides the
// crystal coordinates of the wild-type state. The overrides let callers
// reuse sampled structures, e.g. to check the swap antisymmetry where
// the mutant of the mutant is the wild type.
DdgPrediction predict_ddg(const PredictInputs& in,
                          const std::vector<Eigen::Vector3d>* mut_coords = nullptr,
                          const std::vector<Eigen::Vector3d>* wt_coords = nullptr);

struct TrainDdgConfig {
  double lr = 1e-4;
  int batch_size = 2;
  int max_steps = 5000;
  int patience = 10;  // epochs without validation improvement
  double beta_kl = 1e-3;
  std::uint64_t seed = 0;
  LangevinConfig langevin;
  int k_neighborhood = 8;
  bool train_provider = false;
};

struct DdgEpochLog {
  int epoch = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
  double kl = 0.0;
  double kbt = 0.0;
  double scale = 0.0;
  double bias = 0.0;
};

struct TrainDdgInputs {
  std::vector<const SkempiRecord*> train;
  std::vector<const SkempiRecord*> val;
  // Wild-type complex per record, same order as `train` then `val`.
  std::vector<const Complex*> train_cx;
  std::vector<const Complex*> val_cx;
  const LogProbProvider* provider = nullptr;      // frozen path
  ToyProvider* toy_provider = nullptr;            // trainable path
  const LogProbProvider* kl_reference = nullptr;  // optional KL anchor
  const EnergyModel* ref_model = nullptr;         // frozen sampler/energy
};

struct TrainDdgResult {
  EnergyModel model;  // trained copy
  DdgHead head;
  std::vector<DdgEpochLog> epochs;
  double best_val_mse = 0.0;
  int steps_done = 0;
  bool diverged = false;
};

// Decoding-order seed for a record, derived from its identity so equal
// records always decode in the same order.
std::uint64_t record_plan_seed(std::uint64_t base_seed,
                               const SkempiRecord& rec);

// Supervised fit of the trainable energy model and the combiner head
// (optionally the toy provider) against labeled records. Mutant
// structures are sampled once per record with the frozen reference
// model and cached. Early-stops on validation MSE; on divergence the
// best checkpoint is restored.
TrainDdgResult train_ddg(const TrainDdgInputs& in, const EnergyModel& init,
                         const DdgHead& init_head, const TrainDdgConfig& cfg);

}  // namespace ddgkit
