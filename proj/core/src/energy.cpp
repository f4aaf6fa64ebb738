#include "ddgkit/energy.hpp"

#include <cmath>

#include "ddgkit/aa.hpp"
#include "ddgkit/error.hpp"

namespace ddgkit {

namespace {

// Column offsets of the encoder-input blocks.
struct FeatureLayout {
  int K;
  int inter0 = 0;
  int intra0, aa0, grouppool0, own0, dim;

  explicit FeatureLayout(const EnergyModelConfig& cfg) : K(cfg.rbf.n_rbf) {
    intra0 = kInterAtomPairs * K;
    aa0 = intra0 + kIntraAtomPairs * K;
    grouppool0 = aa0 + kNumAminoAcids;
    own0 = grouppool0 + 2;
    dim = own0 + 2;
  }
};

void check_input(const EnergyModel& model, const EnergyInput& input) {
  const std::size_t n = input.n_members();
  if (n == 0) throw NumericError("energy input has no residues");
  if (input.is_binder.size() != n || input.is_target.size() != n ||
      input.coords.size() != n * kBackboneAtoms) {
    throw NumericError("energy input arrays have inconsistent sizes");
  }
  for (const int aa : input.aa) {
    if (aa < 1 || aa > kNumAminoAcids) {
      throw NumericError("energy input has amino-acid type out of range: " +
                         std::to_string(aa));
    }
  }
  if (model.encoder.in_dim() != model.cfg.feature_dim() ||
      model.encoder.out_dim() != model.cfg.embed_dim ||
      model.embed.cols() != model.cfg.embed_dim ||
      model.embed.rows() != kNumAminoAcids) {
    throw NumericError("encoder/embedding widths do not match the config");
  }
  if (model.mlp_bnd.in_dim() != model.cfg.embed_dim ||
      model.mlp_tgt.in_dim() != model.cfg.embed_dim ||
      model.mlp_bnd.out_dim() != model.mlp_tgt.out_dim()) {
    throw NumericError("interaction MLP widths do not match the config");
  }
}

const Eigen::Vector3d& atom_of(const EnergyInput& input, int i, int a) {
  return input.coords[static_cast<std::size_t>(i) * kBackboneAtoms +
                      static_cast<std::size_t>(a)];
}

// Builds the pooled encoder inputs x (n rows). Pure function of the
// input; pooling means over the n-1 other members (zero when n == 1).
Eigen::MatrixXd build_features(const EnergyModelConfig& cfg,
                               const EnergyInput& input) {
  const FeatureLayout lay(cfg);
  const auto n = static_cast<int>(input.n_members());
  const std::vector<double> mu = cfg.rbf.centers();
  const double gamma = cfg.rbf.gamma();
  std::vector<double> buf(static_cast<std::size_t>(lay.K));

  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, lay.dim);
  for (int i = 0; i < n; ++i) {
    const double inv_m = n > 1 ? 1.0 / static_cast<double>(n - 1) : 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      for (int a = 0; a < kBackboneAtoms; ++a) {
        for (int b = 0; b < kBackboneAtoms; ++b) {
          const double d = (atom_of(input, i, a) - atom_of(input, j, b)).norm();
          rbf_expand(std::min(d, cfg.rbf.r_max), mu, gamma, buf);
          const int col0 = lay.inter0 + (a * 4 + b) * lay.K;
          for (int m = 0; m < lay.K; ++m) {
            x(i, col0 + m) += buf[static_cast<std::size_t>(m)] * inv_m;
          }
        }
      }
      x(i, lay.aa0 + input.aa[static_cast<std::size_t>(j)] - 1) += inv_m;
      if (input.is_binder[static_cast<std::size_t>(j)] != 0) {
        x(i, lay.grouppool0) += inv_m;
      }
      if (input.is_target[static_cast<std::size_t>(j)] != 0) {
        x(i, lay.grouppool0 + 1) += inv_m;
      }
    }
    for (int p = 0; p < kIntraAtomPairs; ++p) {
      const auto [a, b] = kIntraPairs[static_cast<std::size_t>(p)];
      const double d = (atom_of(input, i, a) - atom_of(input, i, b)).norm();
      rbf_expand(std::min(d, cfg.rbf.r_max), mu, gamma, buf);
      const int col0 = lay.intra0 + p * lay.K;
      for (int m = 0; m < lay.K; ++m) {
        x(i, col0 + m) = buf[static_cast<std::size_t>(m)];
      }
    }
    if (input.is_binder[static_cast<std::size_t>(i)] != 0) x(i, lay.own0) = 1.0;
    if (input.is_target[static_cast<std::size_t>(i)] != 0) {
      x(i, lay.own0 + 1) = 1.0;
    }
  }
  return x;
}

// Stages shared by energy_eval and embed_residues: features, encoder, H.
void embed_forward(const EnergyModel& model, const EnergyInput& input,
                   EnergyEval& eval) {
  check_input(model, input);
  const auto n = static_cast<int>(input.n_members());
  eval.x = build_features(model.cfg, input);
  eval.enc_tr.assign(static_cast<std::size_t>(n), MlpTrace{});
  eval.H.resize(n, model.cfg.embed_dim);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd e = mlp_forward(model.encoder, eval.x.row(i).transpose(),
                                          &eval.enc_tr[static_cast<std::size_t>(i)]);
    eval.H.row(i) =
        model.embed.row(input.aa[static_cast<std::size_t>(i)] - 1) + e.transpose();
  }
}

}  // namespace

EnergyModel init_energy_model(const EnergyModelConfig& cfg, Rng& rng) {
  EnergyModel model;
  model.cfg = cfg;
  model.embed.resize(kNumAminoAcids, cfg.embed_dim);
  const double bound = std::sqrt(3.0 / static_cast<double>(cfg.embed_dim));
  for (int r = 0; r < kNumAminoAcids; ++r) {
    for (int c = 0; c < cfg.embed_dim; ++c) {
      model.embed(r, c) = rng.uniform(-bound, bound);
    }
  }
  // Small final-layer gains keep initial energies and logits near zero,
  // which the untrained-model tests rely on.
  model.encoder =
      init_mlp({cfg.feature_dim(), cfg.encoder_hidden, cfg.embed_dim}, 0.1, rng);
  model.mlp_bnd =
      init_mlp({cfg.embed_dim, cfg.interaction_hidden, cfg.embed_dim}, 0.1, rng);
  model.mlp_tgt =
      init_mlp({cfg.embed_dim, cfg.interaction_hidden, cfg.embed_dim}, 0.1, rng);
  return model;
}

void EnergyGrads::init_like(const EnergyModel& model) {
  embed = Eigen::MatrixXd::Zero(model.embed.rows(), model.embed.cols());
  encoder.init_like(model.encoder);
  bnd.init_like(model.mlp_bnd);
  tgt.init_like(model.mlp_tgt);
  energy_offset = 0.0;
}

void EnergyGrads::set_zero() {
  embed.setZero();
  encoder.set_zero();
  bnd.set_zero();
  tgt.set_zero();
  energy_offset = 0.0;
}

void bind_energy_params(EnergyModel& model, EnergyGrads& grads,
                        ParamSet& params, const std::string& prefix) {
  params.add(prefix + "embed", model.embed, grads.embed);
  params.add_mlp(prefix + "encoder", model.encoder, grads.encoder);
  params.add_mlp(prefix + "bnd", model.mlp_bnd, grads.bnd);
  params.add_mlp(prefix + "tgt", model.mlp_tgt, grads.tgt);
  params.add_scalar(prefix + "energy_offset", model.energy_offset,
                    grads.energy_offset);
}

EnergyInput make_energy_input(const Neighborhood& neigh,
                              const std::vector<Eigen::Vector3d>* coords_override) {
  EnergyInput input;
  const std::size_t n = neigh.member_count();
  input.aa.reserve(n);
  input.is_binder.reserve(n);
  input.is_target.reserve(n);
  for (const NeighborEntry& e : neigh.members) {
    input.aa.push_back(e.aa_type);
    input.is_binder.push_back(e.is_binder ? 1 : 0);
    input.is_target.push_back(e.is_target ? 1 : 0);
  }
  if (coords_override != nullptr) {
    if (coords_override->size() != neigh.atom_count()) {
      throw NumericError("coordinate override has " +
                         std::to_string(coords_override->size()) +
                         " atoms, expected " +
                         std::to_string(neigh.atom_count()));
    }
    input.coords = *coords_override;
  } else {
    input.coords = neigh.coords();
  }
  return input;
}

Eigen::MatrixXd embed_residues(const EnergyModel& model,
                               const EnergyInput& input) {
  EnergyEval eval;
  embed_forward(model, input, eval);
  return eval.H;
}

Eigen::MatrixXd embed_residues(const EnergyModel& model,
                               const Neighborhood& neigh) {
  return embed_residues(model, make_energy_input(neigh));
}

double interaction_energy(const MlpStack& mlp_bnd, const MlpStack& mlp_tgt,
                          const Eigen::MatrixXd& h_bnd,
                          const Eigen::MatrixXd& h_tgt) {
  if (h_bnd.rows() < 1 || h_tgt.rows() < 1) {
    throw NumericError("interaction_energy: both sides need at least one row");
  }
  if (h_bnd.cols() != mlp_bnd.in_dim() || h_tgt.cols() != mlp_tgt.in_dim()) {
    throw NumericError("interaction_energy: embedding width mismatch");
  }
  std::vector<Eigen::VectorXd> u(static_cast<std::size_t>(h_bnd.rows()));
  std::vector<Eigen::VectorXd> v(static_cast<std::size_t>(h_tgt.rows()));
  for (Eigen::Index i = 0; i < h_bnd.rows(); ++i) {
    u[static_cast<std::size_t>(i)] =
        mlp_forward(mlp_bnd, h_bnd.row(i).transpose(), nullptr);
  }
  for (Eigen::Index j = 0; j < h_tgt.rows(); ++j) {
    v[static_cast<std::size_t>(j)] =
        mlp_forward(mlp_tgt, h_tgt.row(j).transpose(), nullptr);
  }
  if (!u.empty() && !v.empty() && u[0].size() != v[0].size()) {
    throw NumericError("interaction_energy: output width mismatch");
  }
  double energy = 0.0;
  for (const auto& ui : u) {
    for (const auto& vj : v) {
      energy += ui.dot(vj);
    }
  }
  return energy;
}

double energy_eval(const EnergyModel& model, const EnergyInput& input,
                   EnergyEval& eval) {
  embed_forward(model, input, eval);
  const auto n = static_cast<int>(input.n_members());
  const int d = static_cast<int>(model.mlp_bnd.out_dim());
  eval.pair_tr.assign(static_cast<std::size_t>(n), MlpTrace{});
  eval.uv = Eigen::MatrixXd::Zero(n, d);
  eval.usum = Eigen::VectorXd::Zero(d);
  eval.vsum = Eigen::VectorXd::Zero(d);

  int n_binder = 0;
  int n_target = 0;
  for (int i = 0; i < n; ++i) {
    const auto si = static_cast<std::size_t>(i);
    if (input.is_binder[si] != 0) {
      eval.uv.row(i) = mlp_forward(model.mlp_bnd, eval.H.row(i).transpose(),
                                   &eval.pair_tr[si])
                           .transpose();
      eval.usum += eval.uv.row(i).transpose();
      ++n_binder;
    } else if (input.is_target[si] != 0) {
      eval.uv.row(i) = mlp_forward(model.mlp_tgt, eval.H.row(i).transpose(),
                                   &eval.pair_tr[si])
                           .transpose();
      eval.vsum += eval.uv.row(i).transpose();
      ++n_target;
    }
  }
  if (n_binder == 0 || n_target == 0) {
    throw NumericError(
        "interaction energy undefined: neighborhood covers only one chain "
        "group (binder rows: " +
        std::to_string(n_binder) + ", target rows: " + std::to_string(n_target) +
        ")");
  }

  double energy = 0.0;
  for (int i = 0; i < n; ++i) {
    if (input.is_binder[static_cast<std::size_t>(i)] == 0) continue;
    for (int j = 0; j < n; ++j) {
      if (input.is_target[static_cast<std::size_t>(j)] == 0) continue;
      energy += eval.uv.row(i).dot(eval.uv.row(j));
    }
  }
  eval.energy = energy + model.energy_offset;
  eval.recorded = true;
  return eval.energy;
}

namespace {

// Value-channel reverse through interaction, embedding, and encoder.
// Returns the encoder-input adjoints xbar (n x feature_dim); accumulates
// parameter gradients when grads != nullptr.
Eigen::MatrixXd backward_to_features(const EnergyModel& model,
                                     const EnergyInput& input,
                                     const EnergyEval& eval, double upstream,
                                     EnergyGrads* grads) {
  if (!eval.recorded) {
    throw NumericError("energy backward: no recorded forward pass");
  }
  const auto n = static_cast<int>(input.n_members());
  Eigen::MatrixXd xbar = Eigen::MatrixXd::Zero(n, model.cfg.feature_dim());
  for (int i = 0; i < n; ++i) {
    const auto si = static_cast<std::size_t>(i);
    Eigen::VectorXd hbar;
    if (input.is_binder[si] != 0) {
      const Eigen::VectorXd ubar = upstream * eval.vsum;
      hbar = mlp_backward(model.mlp_bnd, eval.pair_tr[si], ubar,
                          grads != nullptr ? &grads->bnd : nullptr);
    } else if (input.is_target[si] != 0) {
      const Eigen::VectorXd vbar = upstream * eval.usum;
      hbar = mlp_backward(model.mlp_tgt, eval.pair_tr[si], vbar,
                          grads != nullptr ? &grads->tgt : nullptr);
    } else {
      continue;  // context-only rows do not feed the interaction sum
    }
    if (grads != nullptr) {
      grads->embed.row(input.aa[si] - 1) += hbar.transpose();
    }
    xbar.row(i) = mlp_backward(model.encoder, eval.enc_tr[si], hbar,
                               grads != nullptr ? &grads->encoder : nullptr)
                      .transpose();
  }
  if (grads != nullptr) grads->energy_offset += upstream;
  return xbar;
}

}  // namespace

void energy_coord_grad(const EnergyModel& model, const EnergyInput& input,
                       const EnergyEval& eval, double upstream,
                       std::vector<Eigen::Vector3d>& grad) {
  const Eigen::MatrixXd xbar =
      backward_to_features(model, input, eval, upstream, nullptr);
  const FeatureLayout lay(model.cfg);
  const auto n = static_cast<int>(input.n_members());
  const std::vector<double> mu = model.cfg.rbf.centers();
  const double gamma = model.cfg.rbf.gamma();
  const double inv_g2 = 1.0 / (gamma * gamma);
  std::vector<double> phi(static_cast<std::size_t>(lay.K));

  grad.assign(input.coords.size(), Eigen::Vector3d::Zero());

  // d(rbf_m)/d(dc) = -(dc - mu_m)/gamma^2 * rbf_m; dc = min(d, r_max)
  // gates the gradient to zero beyond the clamp.
  auto distance_bar = [&](double dc, const double* phibar) {
    double dbar = 0.0;
    rbf_expand(dc, mu, gamma, phi);
    for (int m = 0; m < lay.K; ++m) {
      dbar += phibar[m] * (-(dc - mu[static_cast<std::size_t>(m)]) * inv_g2) *
              phi[static_cast<std::size_t>(m)];
    }
    return dbar;
  };

  for (int i = 0; i < n; ++i) {
    const double inv_m = n > 1 ? 1.0 / static_cast<double>(n - 1) : 0.0;
    std::vector<double> slice(static_cast<std::size_t>(lay.K));
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      for (int a = 0; a < kBackboneAtoms; ++a) {
        for (int b = 0; b < kBackboneAtoms; ++b) {
          const Eigen::Vector3d u = atom_of(input, i, a) - atom_of(input, j, b);
          const double d = u.norm();
          if (d >= model.cfg.rbf.r_max || d == 0.0) continue;
          const int col0 = lay.inter0 + (a * 4 + b) * lay.K;
          for (int m = 0; m < lay.K; ++m) {
            slice[static_cast<std::size_t>(m)] = xbar(i, col0 + m) * inv_m;
          }
          const double dbar = distance_bar(d, slice.data());
          const Eigen::Vector3d g = (dbar / d) * u;
          grad[static_cast<std::size_t>(i) * kBackboneAtoms +
               static_cast<std::size_t>(a)] += g;
          grad[static_cast<std::size_t>(j) * kBackboneAtoms +
               static_cast<std::size_t>(b)] -= g;
        }
      }
    }
    for (int p = 0; p < kIntraAtomPairs; ++p) {
      const auto [a, b] = kIntraPairs[static_cast<std::size_t>(p)];
      const Eigen::Vector3d u = atom_of(input, i, a) - atom_of(input, i, b);
      const double d = u.norm();
      if (d >= model.cfg.rbf.r_max || d == 0.0) continue;
      const int col0 = lay.intra0 + p * lay.K;
      for (int m = 0; m < lay.K; ++m) {
        slice[static_cast<std::size_t>(m)] = xbar(i, col0 + m);
      }
      const double dbar = distance_bar(d, slice.data());
      const Eigen::Vector3d g = (dbar / d) * u;
      grad[static_cast<std::size_t>(i) * kBackboneAtoms +
           static_cast<std::size_t>(a)] += g;
      grad[static_cast<std::size_t>(i) * kBackboneAtoms +
           static_cast<std::size_t>(b)] -= g;
    }
  }
}

void energy_param_grad(const EnergyModel& model, const EnergyInput& input,
                       const EnergyEval& eval, double upstream,
                       EnergyGrads& grads) {
  backward_to_features(model, input, eval, upstream, &grads);
}

double energy_dir_deriv(const EnergyModel& model, const EnergyInput& input,
                        const EnergyEval& eval,
                        const std::vector<Eigen::Vector3d>& dir,
                        EnergyDirTrace& tangent) {
  if (!eval.recorded) {
    throw NumericError("energy_dir_deriv: no recorded forward pass");
  }
  if (dir.size() != input.coords.size()) {
    throw NumericError("energy_dir_deriv: direction layout mismatch");
  }
  const FeatureLayout lay(model.cfg);
  const auto n = static_cast<int>(input.n_members());
  const std::vector<double> mu = model.cfg.rbf.centers();
  const double gamma = model.cfg.rbf.gamma();
  const double inv_g2 = 1.0 / (gamma * gamma);
  std::vector<double> phi(static_cast<std::size_t>(lay.K));

  auto dir_of = [&](int i, int a) -> const Eigen::Vector3d& {
    return dir[static_cast<std::size_t>(i) * kBackboneAtoms +
               static_cast<std::size_t>(a)];
  };

  // Tangent of the pooled features.
  tangent.xdot = Eigen::MatrixXd::Zero(n, lay.dim);
  for (int i = 0; i < n; ++i) {
    const double inv_m = n > 1 ? 1.0 / static_cast<double>(n - 1) : 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      for (int a = 0; a < kBackboneAtoms; ++a) {
        for (int b = 0; b < kBackboneAtoms; ++b) {
          const Eigen::Vector3d u = atom_of(input, i, a) - atom_of(input, j, b);
          const double d = u.norm();
          if (d >= model.cfg.rbf.r_max || d == 0.0) continue;
          const double ddot = u.dot(dir_of(i, a) - dir_of(j, b)) / d;
          rbf_expand(d, mu, gamma, phi);
          const int col0 = lay.inter0 + (a * 4 + b) * lay.K;
          for (int m = 0; m < lay.K; ++m) {
            const double phiprime = -(d - mu[static_cast<std::size_t>(m)]) *
                                    inv_g2 * phi[static_cast<std::size_t>(m)];
            tangent.xdot(i, col0 + m) += phiprime * ddot * inv_m;
          }
        }
      }
    }
    for (int p = 0; p < kIntraAtomPairs; ++p) {
      const auto [a, b] = kIntraPairs[static_cast<std::size_t>(p)];
      const Eigen::Vector3d u = atom_of(input, i, a) - atom_of(input, i, b);
      const double d = u.norm();
      if (d >= model.cfg.rbf.r_max || d == 0.0) continue;
      const double ddot = u.dot(dir_of(i, a) - dir_of(i, b)) / d;
      rbf_expand(d, mu, gamma, phi);
      const int col0 = lay.intra0 + p * lay.K;
      for (int m = 0; m < lay.K; ++m) {
        const double phiprime = -(d - mu[static_cast<std::size_t>(m)]) * inv_g2 *
                                phi[static_cast<std::size_t>(m)];
        tangent.xdot(i, col0 + m) += phiprime * ddot;
      }
    }
  }

  // Tangent through encoder, embedding (constant), and interaction MLPs.
  const int d_out = static_cast<int>(model.mlp_bnd.out_dim());
  tangent.enc_tt.assign(static_cast<std::size_t>(n), MlpTangentTrace{});
  tangent.pair_tt.assign(static_cast<std::size_t>(n), MlpTangentTrace{});
  tangent.Hdot.resize(n, model.cfg.embed_dim);
  tangent.uvdot = Eigen::MatrixXd::Zero(n, d_out);
  tangent.usum_dot = Eigen::VectorXd::Zero(d_out);
  tangent.vsum_dot = Eigen::VectorXd::Zero(d_out);
  for (int i = 0; i < n; ++i) {
    const auto si = static_cast<std::size_t>(i);
    tangent.Hdot.row(i) =
        mlp_forward_tangent(model.encoder, eval.enc_tr[si],
                            tangent.xdot.row(i).transpose(), &tangent.enc_tt[si])
            .transpose();
    if (input.is_binder[si] != 0) {
      tangent.uvdot.row(i) =
          mlp_forward_tangent(model.mlp_bnd, eval.pair_tr[si],
                              tangent.Hdot.row(i).transpose(),
                              &tangent.pair_tt[si])
              .transpose();
      tangent.usum_dot += tangent.uvdot.row(i).transpose();
    } else if (input.is_target[si] != 0) {
      tangent.uvdot.row(i) =
          mlp_forward_tangent(model.mlp_tgt, eval.pair_tr[si],
                              tangent.Hdot.row(i).transpose(),
                              &tangent.pair_tt[si])
              .transpose();
      tangent.vsum_dot += tangent.uvdot.row(i).transpose();
    }
  }
  tangent.edot =
      tangent.usum_dot.dot(eval.vsum) + eval.usum.dot(tangent.vsum_dot);
  return tangent.edot;
}

void energy_dir_param_grad(const EnergyModel& model, const EnergyInput& input,
                           const EnergyEval& eval,
                           const EnergyDirTrace& tangent, double upstream,
                           EnergyGrads& grads) {
  const auto n = static_cast<int>(input.n_members());
  // Seeds: the objective is edot alone; the energy value has adjoint 0,
  // but second-derivative terms still inject into the value channel.
  for (int i = 0; i < n; ++i) {
    const auto si = static_cast<std::size_t>(i);
    Eigen::VectorXd hbar;
    Eigen::VectorXd hdotbar;
    if (input.is_binder[si] != 0) {
      const Eigen::VectorXd ubar = upstream * tangent.vsum_dot;
      const Eigen::VectorXd udotbar = upstream * eval.vsum;
      auto [hb, hdb] =
          mlp_backward_second(model.mlp_bnd, eval.pair_tr[si],
                              tangent.pair_tt[si], ubar, udotbar, &grads.bnd);
      hbar = std::move(hb);
      hdotbar = std::move(hdb);
    } else if (input.is_target[si] != 0) {
      const Eigen::VectorXd vbar = upstream * tangent.usum_dot;
      const Eigen::VectorXd vdotbar = upstream * eval.usum;
      auto [hb, hdb] =
          mlp_backward_second(model.mlp_tgt, eval.pair_tr[si],
                              tangent.pair_tt[si], vbar, vdotbar, &grads.tgt);
      hbar = std::move(hb);
      hdotbar = std::move(hdb);
    } else {
      continue;
    }
    // H = embed_row + encoder(x); Hdot = encoder tangent (embedding is
    // constant along coordinate directions, so only the value channel
    // reaches the table).
    grads.embed.row(input.aa[si] - 1) += hbar.transpose();
    mlp_backward_second(model.encoder, eval.enc_tr[si], tangent.enc_tt[si],
                        hbar, hdotbar, &grads.encoder);
  }
}

double energy_of(const EnergyModel& model, const Neighborhood& neigh,
                 const std::vector<Eigen::Vector3d>* coords_override) {
  const EnergyInput input = make_energy_input(neigh, coords_override);
  EnergyEval eval;
  return energy_eval(model, input, eval);
}

std::vector<Eigen::Vector3d> score_of(const EnergyModel& model,
                                      const Neighborhood& neigh,
                                      const std::vector<Eigen::Vector3d>& coords) {
  const EnergyInput input = make_energy_input(neigh, &coords);
  EnergyEval eval;
  energy_eval(model, input, eval);
  std::vector<Eigen::Vector3d> grad;
  energy_coord_grad(model, input, eval, 1.0, grad);
  return grad;
}

}  // namespace ddgkit
