#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "ddgkit/energy.hpp"
#include "ddgkit/geometry.hpp"
#include "ddgkit/rng.hpp"

namespace ddgkit {

struct LangevinConfig {
  int steps = 10;          // T
  double alpha0 = 1e-3;    // score step size at t=0
  double eta0 = 1e-2;      // noise step size at t=0
  double sigma2_prior = 0.1;  // variance of the noise prior (Angstrom^2)
  std::uint64_t seed = 0;
  // Cosine annealing of alpha and eta; false holds both constant
  // (used when studying the stationary behavior of the chain).
  bool anneal = true;
};

// v_t = v0 * 0.5 * (1 + cos(pi t / T)); v_0 = v0, v_T = 0.
double cosine_schedule(int t, int total, double v0);

struct Trajectory {
  std::vector<std::vector<Eigen::Vector3d>> snapshots;  // x_0 .. x_T
  std::vector<double> alpha;  // per step 1..T
  std::vector<double> eta;
};

// Log-density score evaluated at the full coordinate set.
using ScoreFn =
    std::function<std::vector<Eigen::Vector3d>(const std::vector<Eigen::Vector3d>&)>;
// Standard-normal draws; injectable so tests can replay transformed noise.
using NoiseFn = std::function<double()>;

// Core update loop: x_t = x_{t-1} + alpha_t * score(x_{t-1}) + eta_t * eps,
// eps ~ N(0, I) drawn per movable atom (x, y, z order). Step t in 1..T
// uses the schedule value at t-1, so the first step applies alpha0 and
// eta0 in full. Atoms with movable[i] == false are copied through
// unchanged and consume no noise draws. Throws NumericError (reporting
// the step) if a coordinate becomes non-finite.
std::vector<Eigen::Vector3d> langevin_run(
    const std::vector<Eigen::Vector3d>& x0, const ScoreFn& score_fn,
    const std::vector<bool>& movable, const LangevinConfig& cfg,
    const NoiseFn& noise, Trajectory* trajectory = nullptr);

struct SampleResult {
  std::vector<Eigen::Vector3d> coords;  // final x_T, neighborhood layout
  Trajectory trajectory;
};

// Samples mutant backbone coordinates: starts from the neighborhood's
// (wild-type) coordinates, follows s = -dE/dX of the frozen reference
// model, and moves only mutation-site atoms; neighbor atoms shape the
// score but stay fixed. The neighborhood must be built from the complex
// with the mutant sequence already applied.
SampleResult langevin_sample(const Neighborhood& mut_neigh,
                             const EnergyModel& ref_model,
                             const LangevinConfig& cfg);

// CSV dump: step,residue,atom,x,y,z for every snapshot.
void write_trajectory_csv(const std::filesystem::path& path,
                          const Neighborhood& neigh,
                          const Trajectory& trajectory);

}  // namespace ddgkit
