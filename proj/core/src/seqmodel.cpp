#include "ddgkit/seqmodel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "ddgkit/aa.hpp"
#include "ddgkit/error.hpp"
#include "ddgkit/mutation.hpp"

namespace ddgkit {

namespace {

double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

}  // namespace

DecodingPlan make_decoding_plan(const std::vector<ResidueKey>& sites, Rng& rng) {
  DecodingPlan plan;
  plan.order = sites;
  std::sort(plan.order.begin(), plan.order.end());
  rng.shuffle(plan.order);
  return plan;
}

double joint_site_logprob(const LogProbProvider& provider, const Complex& ctx,
                          StructState state,
                          const std::vector<SiteAssignment>& assignments,
                          const DecodingPlan& plan) {
  std::map<ResidueKey, int> aa_of;
  for (const auto& a : assignments) {
    if (!aa_of.emplace(a.site, a.aa).second) {
      throw NumericError("joint_site_logprob: duplicate assignment for site " +
                         to_string(a.site));
    }
  }
  if (plan.order.size() != aa_of.size()) {
    throw NumericError("joint_site_logprob: plan does not cover the sites");
  }
  std::set<ResidueKey> planned;
  for (const auto& key : plan.order) {
    if (!planned.insert(key).second) {
      throw NumericError("joint_site_logprob: plan visits site " +
                         to_string(key) + " twice");
    }
    if (aa_of.count(key) == 0) {
      throw NumericError("joint_site_logprob: plan site " + to_string(key) +
                         " has no assignment");
    }
  }

  std::vector<SiteAssignment> decoded;
  decoded.reserve(plan.order.size());
  double total = 0.0;
  for (std::size_t i = 0; i < plan.order.size(); ++i) {
    std::vector<ResidueKey> undecoded(plan.order.begin() +
                                          static_cast<std::ptrdiff_t>(i),
                                      plan.order.end());
    const ResidueKey& site = plan.order[i];
    const Eigen::VectorXd lp =
        provider.site_log_probs(ctx, state, site, decoded, undecoded);
    total += lp[aa_of.at(site) - 1];
    decoded.push_back({site, aa_of.at(site)});
  }
  return total;
}

double unbound_logprob(const LogProbProvider& provider, const Complex& full,
                       const std::vector<SiteAssignment>& assignments,
                       const DecodingPlan& plan) {
  std::set<char> binder_hit, target_hit;
  for (const auto& a : assignments) {
    const bool in_b = full.in_binder(a.site.chain_id);
    const bool in_t = full.in_target(a.site.chain_id);
    if (in_b == in_t) {
      throw NumericError("unbound_logprob: site " + to_string(a.site) +
                         " must belong to exactly one chain group");
    }
    (in_b ? binder_hit : target_hit).insert(a.site.chain_id);
  }

  double total = 0.0;
  for (const bool binder_side : {true, false}) {
    const std::set<char>& chains =
        binder_side ? full.binder_chains : full.target_chains;
    std::vector<SiteAssignment> group_assignments;
    for (const auto& a : assignments) {
      if (chains.count(a.site.chain_id) > 0) group_assignments.push_back(a);
    }
    if (group_assignments.empty()) continue;
    DecodingPlan group_plan;
    for (const auto& key : plan.order) {
      if (chains.count(key.chain_id) > 0) group_plan.order.push_back(key);
    }
    const Complex ctx = restrict_to_chains(full, chains);
    total += joint_site_logprob(provider, ctx, StructState::Unbound,
                                group_assignments, group_plan);
  }
  return total;
}

ToyProvider ToyProvider::init(const ToyProviderConfig& cfg, Rng& rng) {
  ToyProvider p;
  p.cfg = cfg;
  p.net = init_mlp({cfg.feature_dim(), cfg.hidden, kNumAminoAcids}, 0.1, rng);
  return p;
}

Eigen::VectorXd ToyProvider::query_features(
    const Complex& ctx, const ResidueKey& site,
    const std::vector<SiteAssignment>& decoded,
    const std::vector<ResidueKey>& undecoded) const {
  const Neighborhood neigh = select_neighborhood_sites(ctx, {site}, cfg.k);
  const InvariantFeatures feats = featurize(neigh, cfg.rbf);
  const auto n = static_cast<int>(neigh.member_count());
  const std::size_t p = neigh.member_index(site);

  std::map<ResidueKey, int> decoded_aa;
  for (const auto& a : decoded) decoded_aa.emplace(a.site, a.aa);
  std::set<ResidueKey> masked(undecoded.begin(), undecoded.end());

  const int K = cfg.rbf.n_rbf;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(cfg.feature_dim());
  const double inv_m = n > 1 ? 1.0 / static_cast<double>(n - 1) : 0.0;
  const int inter_width = kInterAtomPairs * K;
  const int intra0 = inter_width;
  const int aa0 = intra0 + kIntraAtomPairs * K;
  const int grouppool0 = aa0 + kNumAminoAcids;
  const int own0 = grouppool0 + 2;

  for (int j = 0; j < n; ++j) {
    if (static_cast<std::size_t>(j) == p) continue;
    const Eigen::Index row = static_cast<Eigen::Index>(p) * n + j;
    x.segment(0, inter_width) += feats.inter.row(row).transpose() * inv_m;
    const ResidueKey& jkey = neigh.members[static_cast<std::size_t>(j)].key;
    // Sequence context: decoded sites show their assigned type, masked
    // sites contribute nothing, everything else keeps the complex's type.
    auto it = decoded_aa.find(jkey);
    if (it != decoded_aa.end()) {
      x[aa0 + it->second - 1] += inv_m;
    } else if (masked.count(jkey) == 0) {
      x.segment(aa0, kNumAminoAcids) +=
          feats.aa_onehot.row(j).transpose() * inv_m;
    }
    x.segment(grouppool0, 2) += feats.group.row(j).transpose() * inv_m;
  }
  x.segment(intra0, kIntraAtomPairs * K) = feats.intra.row(static_cast<int>(p));
  x.segment(own0, 2) = feats.group.row(static_cast<int>(p));
  return x;
}

Eigen::VectorXd ToyProvider::log_probs_from_features(
    const Eigen::VectorXd& x) const {
  const Eigen::VectorXd logits = mlp_forward(net, x, nullptr);
  return logits.array() - log_sum_exp(logits);
}

Eigen::VectorXd ToyProvider::logits_trace(const Eigen::VectorXd& x,
                                          MlpTrace& trace) const {
  return mlp_forward(net, x, &trace);
}

Eigen::VectorXd ToyProvider::site_log_probs(
    const Complex& ctx, StructState /*state*/, const ResidueKey& site,
    const std::vector<SiteAssignment>& decoded,
    const std::vector<ResidueKey>& undecoded) const {
  return log_probs_from_features(query_features(ctx, site, decoded, undecoded));
}

void bind_provider_params(ToyProvider& provider, MlpGrads& grads,
                          ParamSet& params, const std::string& prefix) {
  params.add_mlp(prefix + "provider", provider.net, grads);
}

ToyTrainResult train_toy_provider(const std::vector<const Complex*>& complexes,
                                  const ToyProviderConfig& cfg,
                                  const ToyTrainConfig& train_cfg) {
  struct Example {
    Eigen::VectorXd x;
    int label = 0;
  };
  Rng rng(train_cfg.seed);
  ToyTrainResult result;
  result.provider = ToyProvider::init(cfg, rng);
  ToyProvider& provider = result.provider;

  std::vector<Example> examples;
  for (const Complex* cx : complexes) {
    for (const auto& chain : cx->chains) {
      for (const auto& r : chain.residues) {
        if (!r.has_full_backbone()) continue;
        Example e;
        e.x = provider.query_features(*cx, r.key(), {}, {r.key()});
        e.label = r.aa_type;
        examples.push_back(std::move(e));
      }
    }
  }
  if (examples.empty()) {
    throw NumericError("train_toy_provider: no usable residues");
  }

  MlpGrads grads;
  grads.init_like(provider.net);
  ParamSet params;
  bind_provider_params(provider, grads, params);
  AdamState adam;
  adam.init(params);
  AdamConfig adam_cfg;
  adam_cfg.lr = train_cfg.lr;

  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::size_t cursor = order.size();  // forces a shuffle on first use
  for (int step = 0; step < train_cfg.steps; ++step) {
    if (cursor >= order.size()) {
      rng.shuffle(order);
      cursor = 0;
    }
    const Example& e = examples[order[cursor++]];
    MlpTrace trace;
    const Eigen::VectorXd logits = provider.logits_trace(e.x, trace);
    const double lse = log_sum_exp(logits);
    const double loss = lse - logits[e.label - 1];
    if (!std::isfinite(loss)) {
      throw NumericError("train_toy_provider: loss diverged at step " +
                         std::to_string(step));
    }
    result.loss_log.push_back(loss);
    Eigen::VectorXd dlogits = (logits.array() - lse).exp();  // softmax
    dlogits[e.label - 1] -= 1.0;
    params.zero_grads();
    mlp_backward(provider.net, trace, dlogits, &grads);
    adam_step(params, adam, adam_cfg);
  }

  int correct = 0;
  for (const Example& e : examples) {
    const Eigen::VectorXd logits = mlp_forward(provider.net, e.x, nullptr);
    Eigen::Index best = 0;
    logits.maxCoeff(&best);
    if (static_cast<int>(best) + 1 == e.label) ++correct;
  }
  result.train_accuracy =
      static_cast<double>(correct) / static_cast<double>(examples.size());
  return result;
}

double kl_to_reference(const LogProbProvider& p, const LogProbProvider& ref,
                       const Complex& cx, const std::vector<ResidueKey>& sites,
                       int* n_clamped) {
  const double log_floor = std::log(1e-12);
  int clamped = 0;
  double total = 0.0;
  for (const ResidueKey& site : sites) {
    const Eigen::VectorXd lp =
        p.site_log_probs(cx, StructState::Bound, site, {}, sites);
    const Eigen::VectorXd lref =
        ref.site_log_probs(cx, StructState::Bound, site, {}, sites);
    for (int a = 0; a < kNumAminoAcids; ++a) {
      double r = lref[a];
      if (r < log_floor) {
        r = log_floor;
        ++clamped;
      }
      total += std::exp(lp[a]) * (lp[a] - r);
    }
  }
  if (n_clamped != nullptr) *n_clamped = clamped;
  return total;
}

}  // namespace ddgkit
