#pragma once

#include <Eigen/Core>
#include <vector>

#include "ddgkit/aa.hpp"
#include "ddgkit/geometry.hpp"
#include "ddgkit/net.hpp"
#include "ddgkit/rng.hpp"

namespace ddgkit {

struct EnergyModelConfig {
  int embed_dim = 32;         // residue embedding width d
  int encoder_hidden = 64;    // hidden width of the feature encoder
  int interaction_hidden = 64;  // hidden width of the binder/target MLPs
  RbfSpec rbf;                // distance featurization

  // Encoder input: pooled inter-residue atom-pair expansions (16K),
  // intra-residue expansions (6K), pooled neighbor aa one-hot (20),
  // pooled neighbor group (2), own group (2).
  int feature_dim() const {
    return (kInterAtomPairs + kIntraAtomPairs) * rbf.n_rbf + kNumAminoAcids + 4;
  }
};

// E(X) = offset + sum over binder rows i, target rows j of
// <MLP_bnd(H_i), MLP_tgt(H_j)>, where H_i is an amino-acid embedding
// refined by an encoder over SE(3)-invariant distance features. The
// offset is a constant that never receives training gradient; it exists
// to exercise the affine-invariance property of score matching.
struct EnergyModel {
  EnergyModelConfig cfg;
  Eigen::MatrixXd embed;  // 20 x d
  MlpStack encoder;       // feature_dim -> hidden -> d
  MlpStack mlp_bnd;       // d -> hidden -> d
  MlpStack mlp_tgt;       // d -> hidden -> d
  double energy_offset = 0.0;
};

EnergyModel init_energy_model(const EnergyModelConfig& cfg, Rng& rng);

struct EnergyGrads {
  Eigen::MatrixXd embed;
  MlpGrads encoder, bnd, tgt;
  double energy_offset = 0.0;

  void init_like(const EnergyModel& model);
  void set_zero();
};

// Registers all trainable arrays under `prefix` ("<prefix>embed", ...).
void bind_energy_params(EnergyModel& model, EnergyGrads& grads,
                        ParamSet& params, const std::string& prefix = "");

// Flat evaluation input decoupled from Complex bookkeeping: aa type,
// group flags per member, and 4 backbone atom positions per member.
struct EnergyInput {
  std::vector<int> aa;
  std::vector<std::uint8_t> is_binder;
  std::vector<std::uint8_t> is_target;
  std::vector<Eigen::Vector3d> coords;

  std::size_t n_members() const { return aa.size(); }
};

EnergyInput make_energy_input(const Neighborhood& neigh,
                              const std::vector<Eigen::Vector3d>* coords_override =
                                  nullptr);

// Records of one forward evaluation, consumed by the gradient passes.
struct EnergyEval {
  bool recorded = false;
  Eigen::MatrixXd x;  // n x feature_dim encoder inputs
  std::vector<MlpTrace> enc_tr;
  Eigen::MatrixXd H;  // n x d
  std::vector<MlpTrace> pair_tr;  // binder/target rows only
  Eigen::MatrixXd uv;             // n x d; u_i for binder rows, v_j for target
  Eigen::VectorXd usum, vsum;
  double energy = 0.0;
};

// Stages shared with the sequence model: per-residue embeddings H.
Eigen::MatrixXd embed_residues(const EnergyModel& model,
                               const EnergyInput& input);
Eigen::MatrixXd embed_residues(const EnergyModel& model,
                               const Neighborhood& neigh);

// Interaction block on explicit embedding rows; rowwise MLPs, then the
// sum of all pairwise dot products, accumulated row-major to match the
// brute-force oracle's arithmetic order.
double interaction_energy(const MlpStack& mlp_bnd, const MlpStack& mlp_tgt,
                          const Eigen::MatrixXd& h_bnd,
                          const Eigen::MatrixXd& h_tgt);

// Full forward pass. Requires at least one binder and one target row.
double energy_eval(const EnergyModel& model, const EnergyInput& input,
                   EnergyEval& eval);

// grad[atom] += upstream * dE/d coords[atom]; grad is resized and zeroed.
void energy_coord_grad(const EnergyModel& model, const EnergyInput& input,
                       const EnergyEval& eval, double upstream,
                       std::vector<Eigen::Vector3d>& grad);

// grads += upstream * dE/d params.
void energy_param_grad(const EnergyModel& model, const EnergyInput& input,
                       const EnergyEval& eval, double upstream,
                       EnergyGrads& grads);

// Tangent records for the directional derivative <dE/dX, dir>.
struct EnergyDirTrace {
  Eigen::MatrixXd xdot;  // n x feature_dim
  std::vector<MlpTangentTrace> enc_tt, pair_tt;
  Eigen::MatrixXd Hdot, uvdot;
  Eigen::VectorXd usum_dot, vsum_dot;
  double edot = 0.0;
};

// Returns <dE/dX, dir> with parameters fixed.
double energy_dir_deriv(const EnergyModel& model, const EnergyInput& input,
                        const EnergyEval& eval,
                        const std::vector<Eigen::Vector3d>& dir,
                        EnergyDirTrace& tangent);

// grads += upstream * d<dE/dX, dir>/d params, for the same fixed dir.
// Combined with energy_dir_deriv this provides exact parameter
// gradients of score-matching objectives.
void energy_dir_param_grad(const EnergyModel& model, const EnergyInput& input,
                           const EnergyEval& eval,
                           const EnergyDirTrace& tangent, double upstream,
                           EnergyGrads& grads);

// Convenience wrappers over a neighborhood.
double energy_of(const EnergyModel& model, const Neighborhood& neigh,
                 const std::vector<Eigen::Vector3d>* coords_override = nullptr);
std::vector<Eigen::Vector3d> score_of(const EnergyModel& model,
                                      const Neighborhood& neigh,
                                      const std::vector<Eigen::Vector3d>& coords);

}  // namespace ddgkit
