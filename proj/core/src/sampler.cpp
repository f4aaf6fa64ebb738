#include "ddgkit/sampler.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "ddgkit/error.hpp"

namespace ddgkit {

double cosine_schedule(int t, int total, double v0) {
  if (total < 1 || t < 0 || t > total) {
    throw NumericError("cosine_schedule: need 0 <= t <= total, total >= 1");
  }
  const double phase =
      std::numbers::pi * static_cast<double>(t) / static_cast<double>(total);
  return v0 * 0.5 * (1.0 + std::cos(phase));
}

std::vector<Eigen::Vector3d> langevin_run(
    const std::vector<Eigen::Vector3d>& x0, const ScoreFn& score_fn,
    const std::vector<bool>& movable, const LangevinConfig& cfg,
    const NoiseFn& noise, Trajectory* trajectory) {
  if (cfg.steps < 1) throw NumericError("langevin_run: steps must be >= 1");
  if (movable.size() != x0.size()) {
    throw NumericError("langevin_run: movable mask layout mismatch");
  }
  std::vector<Eigen::Vector3d> x = x0;
  if (trajectory != nullptr) {
    trajectory->snapshots.clear();
    trajectory->alpha.clear();
    trajectory->eta.clear();
    trajectory->snapshots.push_back(x);
  }
  for (int t = 1; t <= cfg.steps; ++t) {
    const double alpha =
        cfg.anneal ? cosine_schedule(t - 1, cfg.steps, cfg.alpha0) : cfg.alpha0;
    const double eta =
        cfg.anneal ? cosine_schedule(t - 1, cfg.steps, cfg.eta0) : cfg.eta0;
    const std::vector<Eigen::Vector3d> s = score_fn(x);
    if (s.size() != x.size()) {
      throw NumericError("langevin_run: score field layout mismatch");
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!movable[i]) continue;
      const Eigen::Vector3d eps(noise(), noise(), noise());
      x[i] += alpha * s[i] + eta * eps;
      if (!x[i].allFinite()) {
        throw NumericError("langevin_run: non-finite coordinate at step " +
                           std::to_string(t));
      }
    }
    if (trajectory != nullptr) {
      trajectory->snapshots.push_back(x);
      trajectory->alpha.push_back(alpha);
      trajectory->eta.push_back(eta);
    }
  }
  return x;
}

SampleResult langevin_sample(const Neighborhood& mut_neigh,
                             const EnergyModel& ref_model,
                             const LangevinConfig& cfg) {
  const EnergyInput base = make_energy_input(mut_neigh);
  const ScoreFn score_fn = [&](const std::vector<Eigen::Vector3d>& coords) {
    EnergyInput input = base;
    input.coords = coords;
    EnergyEval eval;
    energy_eval(ref_model, input, eval);
    std::vector<Eigen::Vector3d> grad;
    energy_coord_grad(ref_model, input, eval, 1.0, grad);
    for (auto& g : grad) g = -g;  // log-density score descends the energy
    return grad;
  };
  Rng rng(cfg.seed);
  const NoiseFn noise = [&rng]() { return rng.normal(); };
  SampleResult result;
  result.coords = langevin_run(mut_neigh.coords(), score_fn,
                               mut_neigh.movable_atoms(), cfg, noise,
                               &result.trajectory);
  return result;
}

void write_trajectory_csv(const std::filesystem::path& path,
                          const Neighborhood& neigh,
                          const Trajectory& trajectory) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open trajectory output: " + path.string());
  }
  out << "step,residue,atom,x,y,z\n";
  char buf[64];
  for (std::size_t t = 0; t < trajectory.snapshots.size(); ++t) {
    const auto& snap = trajectory.snapshots[t];
    for (std::size_t m = 0; m < neigh.member_count(); ++m) {
      for (int a = 0; a < kBackboneAtoms; ++a) {
        const Eigen::Vector3d& p = snap[m * kBackboneAtoms +
                                        static_cast<std::size_t>(a)];
        out << t << ',' << to_string(neigh.members[m].key) << ','
            << kBackboneAtomNames[static_cast<std::size_t>(a)];
        std::snprintf(buf, sizeof(buf), ",%.17g,%.17g,%.17g\n", p.x(), p.y(),
                      p.z());
        out << buf;
      }
    }
  }
  if (!out) throw IoError("failed writing trajectory: " + path.string());
}

}  // namespace ddgkit
