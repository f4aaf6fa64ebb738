#include "ddgkit/ddg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ddgkit/error.hpp"
#include "ddgkit/geometry.hpp"
#include "ddgkit/hash.hpp"
#include "ddgkit/mutation.hpp"

namespace ddgkit {

std::uint64_t record_plan_seed(std::uint64_t base_seed,
                               const SkempiRecord& rec) {
  return base_seed ^ fnv1a64(rec.pdb_id + ":" + mutations_to_string(rec.mutations));
}

double ddg_ba_value(const BaTerms& t, double kbt) {
  return -kbt * ((t.bound_mut - t.unbound_mut) - (t.bound_wt - t.unbound_wt));
}

BaTerms ba_terms(const LogProbProvider& provider, const Complex& wt_cx,
                 const MutationSet& muts, const DecodingPlan& plan) {
  std::vector<SiteAssignment> asg_mut, asg_wt;
  asg_mut.reserve(muts.size());
  asg_wt.reserve(muts.size());
  for (const Mutation& m : muts) {
    asg_mut.push_back({m.key(), m.mut_aa});
    asg_wt.push_back({m.key(), m.wt_aa});
  }
  BaTerms t;
  t.bound_mut =
      joint_site_logprob(provider, wt_cx, StructState::Bound, asg_mut, plan);
  t.bound_wt =
      joint_site_logprob(provider, wt_cx, StructState::Bound, asg_wt, plan);
  t.unbound_mut = unbound_logprob(provider, wt_cx, asg_mut, plan);
  t.unbound_wt = unbound_logprob(provider, wt_cx, asg_wt, plan);
  return t;
}

double dde_four_term(const FourEnergies& e) {
  return (e.bound_mut - e.unbound_mut) - (e.bound_wt - e.unbound_wt);
}

double dde_zero_unbound(double e_bound_mut, double e_bound_wt) {
  return e_bound_mut - e_bound_wt;
}

double degeneracy_term(const DegeneracyRatios& omega, double kbt) {
  for (double w : {omega.bound_mut, omega.unbound_mut, omega.bound_wt,
                   omega.unbound_wt}) {
    if (!(w > 0.0)) {
      throw NumericError("degeneracy multiplicities must be positive");
    }
  }
  return -kbt * std::log((omega.bound_mut * omega.unbound_wt) /
                         (omega.unbound_mut * omega.bound_wt));
}

double ddg_full_form(double ddg_ba, double dde, const DegeneracyRatios& omega,
                     double kbt) {
  return ddg_ba - dde + degeneracy_term(omega, kbt);
}

DdgPrediction predict_ddg(const PredictInputs& in,
                          const std::vector<Eigen::Vector3d>* mut_coords,
                          const std::vector<Eigen::Vector3d>* wt_coords) {
  if (in.wt_cx == nullptr || in.muts == nullptr || in.provider == nullptr ||
      in.ref_model == nullptr || in.trainable == nullptr ||
      in.head == nullptr) {
    throw NumericError("predict_ddg: missing inputs");
  }
  const DdgHead& head = *in.head;

  DdgPrediction pred;
  if (in.muts->empty()) {
    pred.degenerate = true;
    pred.ddg_hat = -head.bias;
    return pred;
  }

  const Complex mut_cx = apply_mutation_set(*in.wt_cx, *in.muts);
  const Neighborhood neigh_wt =
      select_neighborhood(*in.wt_cx, *in.muts, in.k_neighborhood);
  const Neighborhood neigh_mut =
      select_neighborhood(mut_cx, *in.muts, in.k_neighborhood);

  if (mut_coords != nullptr) {
    pred.sampled_coords = *mut_coords;
  } else {
    pred.sampled_coords =
        langevin_sample(neigh_mut, *in.ref_model, in.langevin).coords;
  }

  const double e_mut = energy_of(*in.trainable, neigh_mut, &pred.sampled_coords);
  const double e_wt = energy_of(*in.trainable, neigh_wt, wt_coords);
  pred.dde = dde_zero_unbound(e_mut, e_wt);

  Rng plan_rng(in.plan_seed);
  std::vector<ResidueKey> sites;
  for (const Mutation& m : *in.muts) sites.push_back(m.key());
  const DecodingPlan plan = make_decoding_plan(sites, plan_rng);
  pred.ba = ba_terms(*in.provider, *in.wt_cx, *in.muts, plan);
  pred.ddg_ba = ddg_ba_value(pred.ba, head.kbt());

  pred.ddg_hat = pred.ddg_ba - (head.scale * pred.dde + head.bias);
  return pred;
}

namespace {

// Everything precomputable per record while the reference model and the
// decoding plan stay fixed: neighborhoods, sampled mutant coordinates,
// and (with a frozen provider) the log-odds unit of the BA term.
struct RecordCache {
  const SkempiRecord* rec = nullptr;
  const Complex* wt_cx = nullptr;
  Complex mut_cx;
  Neighborhood neigh_wt, neigh_mut;
  EnergyInput in_wt, in_mut;
  DecodingPlan plan;
  std::vector<Eigen::Vector3d> sampled;
  double ba_unit = 0.0;  // (L_b^mut - L_u^mut) - (L_b^wt - L_u^wt)

  // Trainable-provider path: per decode step, the query features and
  // the decoded amino acid, for each of the four joint terms (2 bound,
  // and one per chain-group per side for the unbound pieces).
  struct TermSteps {
    double sign = 1.0;  // contribution of this term's L to ba_unit
    std::vector<Eigen::VectorXd> feats;
    std::vector<int> aa;
  };
  std::vector<TermSteps> terms;

  // KL anchor: cached query features and clamped reference log-probs.
  std::vector<Eigen::VectorXd> kl_feats;
  std::vector<Eigen::VectorXd> kl_ref;
};

double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

// Joint log-probability over cached per-step features; accumulates
// upstream * d(joint)/d(params) when grads is non-null.
double term_logprob(const ToyProvider& provider,
                    const RecordCache::TermSteps& term, double upstream,
                    MlpGrads* grads) {
  double total = 0.0;
  for (std::size_t i = 0; i < term.feats.size(); ++i) {
    MlpTrace trace;
    const Eigen::VectorXd logits = provider.logits_trace(term.feats[i], trace);
    const double lse = log_sum_exp(logits);
    total += logits[term.aa[i] - 1] - lse;
    if (grads != nullptr) {
      Eigen::VectorXd dlogits = -(logits.array() - lse).exp() * upstream;
      dlogits[term.aa[i] - 1] += upstream;
      mlp_backward(provider.net, trace, dlogits, grads);
    }
  }
  return total;
}

// Fills cache.terms with feature sequences for the four joint terms,
// mirroring joint_site_logprob / unbound_logprob step by step.
void cache_provider_steps(RecordCache& cache, const ToyProvider& provider) {
  std::vector<SiteAssignment> asg_mut, asg_wt;
  for (const Mutation& m : cache.rec->mutations) {
    asg_mut.push_back({m.key(), m.mut_aa});
    asg_wt.push_back({m.key(), m.wt_aa});
  }

  auto add_term = [&](const Complex& ctx,
                      const std::vector<SiteAssignment>& asg,
                      const std::vector<ResidueKey>& order, double sign) {
    RecordCache::TermSteps term;
    term.sign = sign;
    std::vector<SiteAssignment> decoded;
    for (std::size_t i = 0; i < order.size(); ++i) {
      std::vector<ResidueKey> undecoded(order.begin() +
                                            static_cast<std::ptrdiff_t>(i),
                                        order.end());
      term.feats.push_back(
          provider.query_features(ctx, order[i], decoded, undecoded));
      int aa = 0;
      for (const auto& a : asg) {
        if (a.site == order[i]) aa = a.aa;
      }
      term.aa.push_back(aa);
      decoded.push_back({order[i], aa});
    }
    cache.terms.push_back(std::move(term));
  };

  add_term(*cache.wt_cx, asg_mut, cache.plan.order, +1.0);
  add_term(*cache.wt_cx, asg_wt, cache.plan.order, -1.0);

  for (const bool binder_side : {true, false}) {
    const std::set<char>& chains = binder_side ? cache.wt_cx->binder_chains
                                               : cache.wt_cx->target_chains;
    std::vector<ResidueKey> group_order;
    for (const auto& key : cache.plan.order) {
      if (chains.count(key.chain_id) > 0) group_order.push_back(key);
    }
    if (group_order.empty()) continue;
    const Complex restricted = restrict_to_chains(*cache.wt_cx, chains);
    std::vector<SiteAssignment> g_mut, g_wt;
    for (std::size_t i = 0; i < asg_mut.size(); ++i) {
      if (chains.count(asg_mut[i].site.chain_id) > 0) {
        g_mut.push_back(asg_mut[i]);
        g_wt.push_back(asg_wt[i]);
      }
    }
    add_term(restricted, g_mut, group_order, -1.0);
    add_term(restricted, g_wt, group_order, +1.0);
  }
}

void cache_kl_anchor(RecordCache& cache, const ToyProvider& provider,
                     const LogProbProvider& reference) {
  const double log_floor = std::log(1e-12);
  std::vector<ResidueKey> sites;
  for (const Mutation& m : cache.rec->mutations) sites.push_back(m.key());
  std::sort(sites.begin(), sites.end());
  for (const ResidueKey& site : sites) {
    cache.kl_feats.push_back(
        provider.query_features(*cache.wt_cx, site, {}, sites));
    Eigen::VectorXd lref = reference.site_log_probs(
        *cache.wt_cx, StructState::Bound, site, {}, sites);
    for (Eigen::Index a = 0; a < lref.size(); ++a) {
      lref[a] = std::max(lref[a], log_floor);
    }
    cache.kl_ref.push_back(std::move(lref));
  }
}

// KL(provider || reference) summed over the record's sites; accumulates
// upstream * dKL/d(params) when grads is non-null.
double record_kl(const ToyProvider& provider, const RecordCache& cache,
                 double upstream, MlpGrads* grads) {
  double total = 0.0;
  for (std::size_t i = 0; i < cache.kl_feats.size(); ++i) {
    MlpTrace trace;
    const Eigen::VectorXd logits =
        provider.logits_trace(cache.kl_feats[i], trace);
    const double lse = log_sum_exp(logits);
    const Eigen::VectorXd lp = logits.array() - lse;
    const Eigen::VectorXd p = lp.array().exp();
    const Eigen::VectorXd diff = lp - cache.kl_ref[i];
    const double kl_site = p.dot(diff);
    total += kl_site;
    if (grads != nullptr) {
      const Eigen::VectorXd dlogits =
          upstream * (p.array() * (diff.array() - kl_site)).matrix();
      mlp_backward(provider.net, trace, dlogits, grads);
    }
  }
  return total;
}

}  // namespace

TrainDdgResult train_ddg(const TrainDdgInputs& in, const EnergyModel& init,
                         const DdgHead& init_head, const TrainDdgConfig& cfg) {
  if (in.ref_model == nullptr) {
    throw NumericError("train_ddg: reference model is required");
  }
  const bool train_provider = cfg.train_provider && in.toy_provider != nullptr;
  const LogProbProvider* provider =
      train_provider ? static_cast<const LogProbProvider*>(in.toy_provider)
                     : in.provider;
  if (provider == nullptr) {
    throw NumericError("train_ddg: no log-probability provider");
  }
  if (in.train.size() != in.train_cx.size() ||
      in.val.size() != in.val_cx.size()) {
    throw NumericError("train_ddg: record/complex list size mismatch");
  }
  if (in.train.empty()) {
    throw NumericError("train_ddg: empty training set");
  }

  TrainDdgResult result;
  result.model = init;
  result.head = init_head;
  result.head.beta_kl = cfg.beta_kl;
  EnergyModel& model = result.model;
  DdgHead& head = result.head;

  Rng rng(cfg.seed);

  auto build_cache = [&](const SkempiRecord& rec,
                         const Complex& wt_cx) -> RecordCache {
    RecordCache c;
    c.rec = &rec;
    c.wt_cx = &wt_cx;
    c.mut_cx = apply_mutation_set(wt_cx, rec.mutations);
    c.neigh_wt = select_neighborhood(wt_cx, rec.mutations, cfg.k_neighborhood);
    c.neigh_mut =
        select_neighborhood(c.mut_cx, rec.mutations, cfg.k_neighborhood);
    // One decoding order per record, keyed by record identity so that
    // duplicated records see identical plans (and identical losses).
    std::vector<ResidueKey> sites;
    for (const Mutation& m : rec.mutations) sites.push_back(m.key());
    Rng plan_rng(record_plan_seed(cfg.seed, rec));
    c.plan = make_decoding_plan(sites, plan_rng);
    c.sampled = langevin_sample(c.neigh_mut, *in.ref_model, cfg.langevin).coords;
    c.in_wt = make_energy_input(c.neigh_wt);
    c.in_mut = make_energy_input(c.neigh_mut, &c.sampled);
    if (train_provider) {
      cache_provider_steps(c, *in.toy_provider);
      if (in.kl_reference != nullptr) {
        cache_kl_anchor(c, *in.toy_provider, *in.kl_reference);
      }
    } else {
      const BaTerms t = ba_terms(*provider, wt_cx, rec.mutations, c.plan);
      c.ba_unit = (t.bound_mut - t.unbound_mut) - (t.bound_wt - t.unbound_wt);
    }
    return c;
  };

  std::vector<RecordCache> train_cache, val_cache;
  for (std::size_t i = 0; i < in.train.size(); ++i) {
    train_cache.push_back(build_cache(*in.train[i], *in.train_cx[i]));
  }
  for (std::size_t i = 0; i < in.val.size(); ++i) {
    val_cache.push_back(build_cache(*in.val[i], *in.val_cx[i]));
  }

  EnergyGrads egrads;
  egrads.init_like(model);
  double g_log_kbt = 0.0, g_scale = 0.0, g_bias = 0.0;
  MlpGrads pgrads;
  if (train_provider) pgrads.init_like(in.toy_provider->net);

  ParamSet params;
  bind_energy_params(model, egrads, params, "energy.");
  params.add_scalar("head.log_kbt", head.log_kbt, g_log_kbt);
  params.add_scalar("head.scale", head.scale, g_scale);
  params.add_scalar("head.bias", head.bias, g_bias);
  if (train_provider) {
    bind_provider_params(*in.toy_provider, pgrads, params, "seq.");
  }

  AdamState adam;
  adam.init(params);
  AdamConfig adam_cfg;
  adam_cfg.lr = cfg.lr;

  // pred = -kbt * ba_unit - (scale * dde + bias); returns the residual
  // pieces needed for gradients.
  struct Forward {
    double pred, ddg_ba, dde, ba_unit;
    EnergyEval ev_mut, ev_wt;
  };
  auto forward = [&](const RecordCache& c) -> Forward {
    Forward f;
    const double e_mut = energy_eval(model, c.in_mut, f.ev_mut);
    const double e_wt = energy_eval(model, c.in_wt, f.ev_wt);
    f.dde = dde_zero_unbound(e_mut, e_wt);
    if (train_provider) {
      f.ba_unit = 0.0;
      for (const auto& term : c.terms) {
        f.ba_unit +=
            term.sign * term_logprob(*in.toy_provider, term, 0.0, nullptr);
      }
    } else {
      f.ba_unit = c.ba_unit;
    }
    f.ddg_ba = -head.kbt() * f.ba_unit;
    f.pred = f.ddg_ba - (head.scale * f.dde + head.bias);
    return f;
  };

  auto val_mse = [&]() -> double {
    if (val_cache.empty()) return 0.0;
    double sum = 0.0;
    for (const RecordCache& c : val_cache) {
      const Forward f = forward(c);
      const double r = f.pred - c.rec->ddg_label;
      sum += r * r;
    }
    return sum / static_cast<double>(val_cache.size());
  };

  std::vector<std::size_t> order(train_cache.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<double> best_params = params.flatten_values();
  double best_val = std::numeric_limits<double>::infinity();
  int bad_epochs = 0;
  int steps = 0;
  bool stop = false;

  const int batch = std::max(1, cfg.batch_size);
  for (int epoch = 0; !stop && steps < cfg.max_steps; ++epoch) {
    rng.shuffle(order);
    double epoch_sq = 0.0;
    double epoch_kl = 0.0;
    std::size_t epoch_n = 0;

    for (std::size_t at = 0; at < order.size() && steps < cfg.max_steps;
         at += static_cast<std::size_t>(batch)) {
      const std::size_t hi =
          std::min(order.size(), at + static_cast<std::size_t>(batch));
      const auto bsize = static_cast<double>(hi - at);
      params.zero_grads();
      double batch_loss = 0.0;

      for (std::size_t bi = at; bi < hi; ++bi) {
        const RecordCache& c = train_cache[order[bi]];
        const Forward f = forward(c);
        const double r = f.pred - c.rec->ddg_label;
        batch_loss += r * r / bsize;
        epoch_sq += r * r;
        ++epoch_n;

        const double up = 2.0 * r / bsize;
        g_log_kbt += up * f.ddg_ba;
        g_scale += -up * f.dde;
        g_bias += -up;
        energy_param_grad(model, c.in_mut, f.ev_mut, -up * head.scale, egrads);
        energy_param_grad(model, c.in_wt, f.ev_wt, up * head.scale, egrads);
        if (train_provider) {
          for (const auto& term : c.terms) {
            term_logprob(*in.toy_provider, term,
                         -up * head.kbt() * term.sign, &pgrads);
          }
          if (in.kl_reference != nullptr) {
            const double kl = record_kl(*in.toy_provider, c,
                                        cfg.beta_kl / bsize, &pgrads);
            batch_loss += cfg.beta_kl * kl / bsize;
            epoch_kl += kl;
          }
        }
      }

      if (!std::isfinite(batch_loss)) {
        params.set_values(best_params);
        result.diverged = true;
        stop = true;
        break;
      }
      adam_step(params, adam, adam_cfg);
      ++steps;
    }

    if (epoch_n == 0) break;
    DdgEpochLog log;
    log.epoch = epoch;
    log.train_mse = epoch_sq / static_cast<double>(epoch_n);
    log.val_mse = val_mse();
    log.kl = epoch_kl / static_cast<double>(epoch_n);
    log.kbt = head.kbt();
    log.scale = head.scale;
    log.bias = head.bias;
    result.epochs.push_back(log);

    if (!result.diverged) {
      const double v = val_cache.empty() ? log.train_mse : log.val_mse;
      if (v < best_val) {
        best_val = v;
        best_params = params.flatten_values();
        bad_epochs = 0;
      } else if (++bad_epochs >= cfg.patience) {
        stop = true;
      }
    }
  }

  params.set_values(best_params);
  result.best_val_mse = best_val;
  result.steps_done = steps;
  return result;
}

}  // namespace ddgkit
