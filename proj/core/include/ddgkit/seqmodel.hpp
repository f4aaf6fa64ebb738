#pragma once

#include <Eigen/Core>
#include <vector>

#include "ddgkit/aa.hpp"
#include "ddgkit/geometry.hpp"
#include "ddgkit/net.hpp"
#include "ddgkit/rng.hpp"
#include "ddgkit/types.hpp"

namespace ddgkit {

// Whether a query is conditioned on the full complex structure or on a
// single chain group in isolation. Providers backed by precomputed
// tables key on this; structural providers receive the restricted
// complex as ctx and may ignore the flag.
enum class StructState { Bound, Unbound };

struct SiteAssignment {
  ResidueKey site;
  int aa = 0;  // 1..20
};

// Source of per-position amino-acid log-probabilities conditioned on
// structure. Returned vectors hold log p for all 20 types and must be
// normalized: |log sum_a exp(logp_a)| <= 1e-6.
//
// `decoded` carries sites already assigned earlier in the decoding
// order; `undecoded` the sites still masked (the query site included).
class LogProbProvider {
 public:
  virtual ~LogProbProvider() = default;

  virtual Eigen::VectorXd site_log_probs(
      const Complex& ctx, StructState state, const ResidueKey& site,
      const std::vector<SiteAssignment>& decoded,
      const std::vector<ResidueKey>& undecoded) const = 0;
};

// A random decoding order over the mutation sites.
struct DecodingPlan {
  std::vector<ResidueKey> order;
};

DecodingPlan make_decoding_plan(const std::vector<ResidueKey>& sites, Rng& rng);

// Chain-rule joint: sum over the plan's order of
// log p(aa_s | structure, previously decoded sites). The plan must
// cover exactly the assignment sites.
double joint_site_logprob(const LogProbProvider& provider, const Complex& ctx,
                          StructState state,
                          const std::vector<SiteAssignment>& assignments,
                          const DecodingPlan& plan);

// Unbound factorization: assignments are grouped by chain group, each
// group scored by joint_site_logprob against only that group's chains
// (plan order preserved within groups). Empty assignment lists yield 0.
double unbound_logprob(const LogProbProvider& provider, const Complex& full,
                       const std::vector<SiteAssignment>& assignments,
                       const DecodingPlan& plan);

// Trainable desk-scale inverse-folding model: an MLP over invariant
// features of the query position's neighborhood, with the query (and any
// still-undecoded site) masked out of the sequence context.
struct ToyProviderConfig {
  int hidden = 64;
  int k = 8;  // context residues around the query
  RbfSpec rbf;

  int feature_dim() const {
    return (kInterAtomPairs + kIntraAtomPairs) * rbf.n_rbf + kNumAminoAcids + 4;
  }
};

class ToyProvider final : public LogProbProvider {
 public:
  ToyProviderConfig cfg;
  MlpStack net;  // feature_dim -> hidden -> 20

  static ToyProvider init(const ToyProviderConfig& cfg, Rng& rng);

  Eigen::VectorXd site_log_probs(
      const Complex& ctx, StructState state, const ResidueKey& site,
      const std::vector<SiteAssignment>& decoded,
      const std::vector<ResidueKey>& undecoded) const override;

  // Encoder input for one query; independent of the net parameters, so
  // training loops may cache it.
  Eigen::VectorXd query_features(const Complex& ctx, const ResidueKey& site,
                                 const std::vector<SiteAssignment>& decoded,
                                 const std::vector<ResidueKey>& undecoded) const;

  Eigen::VectorXd log_probs_from_features(const Eigen::VectorXd& x) const;
  Eigen::VectorXd logits_trace(const Eigen::VectorXd& x, MlpTrace& trace) const;
};

void bind_provider_params(ToyProvider& provider, MlpGrads& grads,
                          ParamSet& params, const std::string& prefix = "");

struct ToyTrainConfig {
  int steps = 2000;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

struct ToyTrainResult {
  ToyProvider provider;
  std::vector<double> loss_log;
  double train_accuracy = 0.0;  // argmax == observed residue, final params
};

// Masked-residue cross-entropy over every complete-backbone residue of
// the given complexes. Deterministic for a fixed config; throws
// NumericError if the loss diverges.
ToyTrainResult train_toy_provider(const std::vector<const Complex*>& complexes,
                                  const ToyProviderConfig& cfg,
                                  const ToyTrainConfig& train_cfg);

// KL(p || ref) summed over sites, each site queried on the bound
// structure with all sites masked and nothing decoded. Reference
// probabilities are clamped at 1e-12 (clamp count reported through
// n_clamped when non-null).
double kl_to_reference(const LogProbProvider& p, const LogProbProvider& ref,
                       const Complex& cx, const std::vector<ResidueKey>& sites,
                       int* n_clamped = nullptr);

}  // namespace ddgkit
