#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest/doctest.h>

#include <cmath>
#include <cstddef>
#include <vector>

#include "ddgkit/energy.hpp"
#include "ddgkit/error.hpp"
#include "ddgkit/geometry.hpp"
#include "ddgkit/rng.hpp"
#include "ddgkit/sampler.hpp"
#include "ddgkit/synthetic.hpp"
#include "support/fixtures.hpp"

using namespace ddgkit;

namespace {

EnergyModelConfig small_config() {
  EnergyModelConfig cfg;
  cfg.embed_dim = 8;
  cfg.encoder_hidden = 16;
  cfg.interaction_hidden = 16;
  cfg.rbf.n_rbf = 8;
  return cfg;
}

Neighborhood site_neighborhood(const Complex& cx, int k) {
  const Residue& res = cx.chains[0].residues[2];
  MutationSet muts = {{res.aa_type, res.chain_id, res.seq_index,
                       res.aa_type == 1 ? 2 : 1}};
  return select_neighborhood(cx, muts, k);
}

ScoreFn zero_score() {
  return [](const std::vector<Eigen::Vector3d>& x) {
    return std::vector<Eigen::Vector3d>(x.size(), Eigen::Vector3d::Zero());
  };
}

// Maps noise-draw position within an atom's three draws to the x/y/z
// component it lands in; probed empirically because the constructor
// argument evaluation order is unspecified.
std::array<int, 3> noise_slot_components() {
  const std::array<double, 3> canary = {10.0, 20.0, 30.0};
  std::size_t next = 0;
  const NoiseFn probe = [&]() { return canary[next++]; };
  LangevinConfig cfg;
  cfg.steps = 1;
  cfg.alpha0 = 0.0;
  cfg.eta0 = 1.0;
  cfg.anneal = false;
  const std::vector<Eigen::Vector3d> x0 = {Eigen::Vector3d::Zero()};
  const auto xT = langevin_run(x0, zero_score(), {true}, cfg, probe);
  std::array<int, 3> comp{};
  for (int s = 0; s < 3; ++s) {
    comp[static_cast<std::size_t>(s)] = -1;
    for (int c = 0; c < 3; ++c) {
      if (xT[0][c] == canary[static_cast<std::size_t>(s)]) {
        comp[static_cast<std::size_t>(s)] = c;
      }
    }
    REQUIRE(comp[static_cast<std::size_t>(s)] >= 0);
  }
  return comp;
}

}  // namespace

TEST_CASE("the cosine schedule hits its endpoints exactly") {
  const double v0 = 0.123;
  for (const int total : {1, 3, 7, 10, 100}) {
    CHECK(cosine_schedule(0, total, v0) == v0);
    CHECK(cosine_schedule(total, total, v0) == 0.0);
  }
  CHECK(cosine_schedule(5, 10, 2.0) == doctest::Approx(1.0).epsilon(1e-15));
  for (int t = 1; t <= 10; ++t) {
    CHECK(cosine_schedule(t, 10, v0) < cosine_schedule(t - 1, 10, v0));
  }
  CHECK_THROWS_AS(cosine_schedule(-1, 10, v0), NumericError);
  CHECK_THROWS_AS(cosine_schedule(11, 10, v0), NumericError);
  CHECK_THROWS_AS(cosine_schedule(0, 0, v0), NumericError);
}

TEST_CASE("one step with zero score and zero noise scale is the identity") {
  SyntheticSpec spec;
  spec.seed = 2;
  const Complex cx = make_synthetic_complex(spec);
  const Neighborhood neigh = site_neighborhood(cx, 4);
  LangevinConfig cfg;
  cfg.steps = 1;
  cfg.eta0 = 0.0;
  Rng rng(7);
  const NoiseFn noise = [&rng]() { return rng.normal(); };
  const std::vector<Eigen::Vector3d> x0 = neigh.coords();
  const auto xT =
      langevin_run(x0, zero_score(), neigh.movable_atoms(), cfg, noise);
  REQUIRE(xT.size() == x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) CHECK(xT[i] == x0[i]);
}

TEST_CASE("invalid run setups are rejected") {
  const std::vector<Eigen::Vector3d> x0 = {Eigen::Vector3d::Zero()};
  const NoiseFn noise = []() { return 0.0; };
  LangevinConfig cfg;
  cfg.steps = 0;
  CHECK_THROWS_AS(langevin_run(x0, zero_score(), {true}, cfg, noise),
                  NumericError);
  cfg.steps = 1;
  CHECK_THROWS_AS(langevin_run(x0, zero_score(), {true, true}, cfg, noise),
                  NumericError);
  const ScoreFn bad_layout = [](const std::vector<Eigen::Vector3d>& x) {
    return std::vector<Eigen::Vector3d>(x.size() + 1, Eigen::Vector3d::Zero());
  };
  CHECK_THROWS_AS(langevin_run(x0, bad_layout, {true}, cfg, noise),
                  NumericError);
  const ScoreFn exploding = [](const std::vector<Eigen::Vector3d>& x) {
    return std::vector<Eigen::Vector3d>(
        x.size(), Eigen::Vector3d::Constant(
                      std::numeric_limits<double>::infinity()));
  };
  CHECK_THROWS_WITH_AS(langevin_run(x0, exploding, {true}, cfg, noise),
                       "langevin_run: non-finite coordinate at step 1",
                       NumericError);
}

TEST_CASE("the trajectory records the annealed schedule and all snapshots") {
  SyntheticSpec spec;
  spec.seed = 4;
  const Complex cx = make_synthetic_complex(spec);
  const Neighborhood neigh = site_neighborhood(cx, 4);
  Rng rng(9);
  const EnergyModel model = init_energy_model(small_config(), rng);
  LangevinConfig cfg;
  cfg.steps = 10;
  cfg.seed = 11;
  SampleResult result = langevin_sample(neigh, model, cfg);
  const Trajectory& traj = result.trajectory;
  REQUIRE(traj.snapshots.size() == 11);
  REQUIRE(traj.alpha.size() == 10);
  const std::vector<Eigen::Vector3d> x0 = neigh.coords();
  for (std::size_t i = 0; i < x0.size(); ++i) {
    CHECK(traj.snapshots[0][i] == x0[i]);
    CHECK(traj.snapshots.back()[i] == result.coords[i]);
  }
  CHECK(traj.alpha[0] == cfg.alpha0);  // step 1 applies the full step size
  CHECK(traj.eta[0] == cfg.eta0);
  for (int t = 0; t < 10; ++t) {
    CHECK(traj.alpha[static_cast<std::size_t>(t)] ==
          cosine_schedule(t, 10, cfg.alpha0));
    CHECK(traj.eta[static_cast<std::size_t>(t)] ==
          cosine_schedule(t, 10, cfg.eta0));
  }
}

TEST_CASE("sampling is bitwise reproducible and seed-sensitive") {
  SyntheticSpec spec;
  spec.seed = 6;
  const Complex cx = make_synthetic_complex(spec);
  const Neighborhood neigh = site_neighborhood(cx, 5);
  Rng rng(13);
  const EnergyModel model = init_energy_model(small_config(), rng);
  LangevinConfig cfg;
  cfg.seed = 21;
  const SampleResult a = langevin_sample(neigh, model, cfg);
  const SampleResult b = langevin_sample(neigh, model, cfg);
  REQUIRE(a.coords.size() == b.coords.size());
  for (std::size_t i = 0; i < a.coords.size(); ++i) {
    CHECK(a.coords[i] == b.coords[i]);
  }
  cfg.seed = 22;
  const SampleResult c = langevin_sample(neigh, model, cfg);
  double diff = 0.0;
  for (std::size_t i = 0; i < a.coords.size(); ++i) {
    diff = std::max(diff, (a.coords[i] - c.coords[i]).cwiseAbs().maxCoeff());
  }
  CHECK(diff > 0.0);
}

TEST_CASE("only mutation-site atoms move") {
  SyntheticSpec spec;
  spec.seed = 8;
  const Complex cx = make_synthetic_complex(spec);
  const Neighborhood neigh = site_neighborhood(cx, 5);
  Rng rng(15);
  const EnergyModel model = init_energy_model(small_config(), rng);
  LangevinConfig cfg;
  cfg.seed = 23;
  const SampleResult result = langevin_sample(neigh, model, cfg);
  const std::vector<Eigen::Vector3d> x0 = neigh.coords();
  const std::vector<bool> movable = neigh.movable_atoms();
  REQUIRE(movable.size() == x0.size());
  bool any_moved = false;
  for (std::size_t i = 0; i < x0.size(); ++i) {
    if (movable[i]) {
      any_moved = any_moved || result.coords[i] != x0[i];
    } else {
      CHECK(result.coords[i] == x0[i]);
      for (const auto& snap : result.trajectory.snapshots) {
        CHECK(snap[i] == x0[i]);
      }
    }
  }
  CHECK(any_moved);
}

TEST_CASE("noiseless small-step sampling never increases the energy") {
  SyntheticSpec spec;
  spec.seed = 10;
  const Complex cx = make_synthetic_complex(spec);
  const Neighborhood neigh = site_neighborhood(cx, 5);
  Rng rng(17);
  const EnergyModel model = init_energy_model(small_config(), rng);
  LangevinConfig cfg;
  cfg.steps = 50;
  cfg.alpha0 = 1e-5;
  cfg.eta0 = 0.0;
  cfg.anneal = false;
  const SampleResult result = langevin_sample(neigh, model, cfg);
  double prev = energy_of(model, neigh, &result.trajectory.snapshots[0]);
  for (std::size_t t = 1; t < result.trajectory.snapshots.size(); ++t) {
    const double e = energy_of(model, neigh, &result.trajectory.snapshots[t]);
    CHECK(e <= prev + 1e-12);
    prev = e;
  }
}

TEST_CASE("rotating the start and the noise rotates the whole chain") {
  SyntheticSpec spec;
  spec.seed = 12;
  const Complex cx = make_synthetic_complex(spec);
  const Neighborhood neigh = site_neighborhood(cx, 5);
  Rng rng(19);
  const EnergyModel model = init_energy_model(small_config(), rng);

  const ScoreFn score_fn = [&](const std::vector<Eigen::Vector3d>& coords) {
    auto g = score_of(model, neigh, coords);
    for (auto& v : g) v = -v;
    return g;
  };
  LangevinConfig cfg;
  cfg.steps = 8;
  const std::vector<bool> movable = neigh.movable_atoms();
  const std::vector<Eigen::Vector3d> x0 = neigh.coords();

  std::vector<double> draws;
  Rng noise_rng(991);
  const NoiseFn record = [&]() {
    draws.push_back(noise_rng.normal());
    return draws.back();
  };
  const auto base = langevin_run(x0, score_fn, movable, cfg, record);
  REQUIRE(draws.size() % 3 == 0);

  Rng trng(993);
  const Eigen::Matrix3d R = testing::random_rotation(trng);
  const Eigen::Vector3d t(3.0, -1.5, 0.25);

  const std::array<int, 3> comp = noise_slot_components();
  std::vector<double> rotated(draws.size());
  for (std::size_t j = 0; j < draws.size() / 3; ++j) {
    Eigen::Vector3d eps;
    for (int s = 0; s < 3; ++s) {
      eps[comp[static_cast<std::size_t>(s)]] = draws[3 * j +
                                                     static_cast<std::size_t>(s)];
    }
    const Eigen::Vector3d weps = R * eps;
    for (int s = 0; s < 3; ++s) {
      rotated[3 * j + static_cast<std::size_t>(s)] =
          weps[comp[static_cast<std::size_t>(s)]];
    }
  }
  std::size_t next = 0;
  const NoiseFn replay = [&]() { return rotated[next++]; };
  std::vector<Eigen::Vector3d> x0r(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) x0r[i] = R * x0[i] + t;
  const auto moved = langevin_run(x0r, score_fn, movable, cfg, replay);
  CHECK(next == rotated.size());

  double worst = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    worst = std::max(worst,
                     (moved[i] - (R * base[i] + t)).cwiseAbs().maxCoeff());
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("a constant-step chain matches its stationary law on a quadratic") {
  // Score of an isotropic Gaussian: s(x) = -(x - mu)/tau^2. The update
  // x <- x + alpha s + eta eps is then AR(1) with rho = 1 - alpha/tau^2
  // and stationary variance eta^2 / (1 - rho^2) per scalar coordinate.
  const double tau2 = 0.01;
  LangevinConfig cfg;
  cfg.steps = 2000;
  cfg.alpha0 = 1e-3;
  cfg.eta0 = std::sqrt(2e-3);
  cfg.anneal = false;
  const double rho = 1.0 - cfg.alpha0 / tau2;
  const double stat_var = cfg.eta0 * cfg.eta0 / (1.0 - rho * rho);

  const std::vector<Eigen::Vector3d> mu = {{0.3, -0.2, 0.1},
                                           {-0.1, 0.25, -0.35}};
  const ScoreFn score_fn = [&](const std::vector<Eigen::Vector3d>& x) {
    std::vector<Eigen::Vector3d> s(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) s[i] = -(x[i] - mu[i]) / tau2;
    return s;
  };
  Rng rng(20240917);
  const NoiseFn noise = [&rng]() { return rng.normal(); };
  Trajectory traj;
  langevin_run(mu, score_fn, {true, true}, cfg, noise, &traj);

  const std::size_t burn_in = 500;
  const auto n = static_cast<double>(traj.snapshots.size() - 1 - burn_in);
  double pooled_var = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    for (int k = 0; k < 3; ++k) {
      double mean = 0.0;
      for (std::size_t s = burn_in + 1; s < traj.snapshots.size(); ++s) {
        mean += traj.snapshots[s][i][k];
      }
      mean /= n;
      CHECK(std::abs(mean - mu[i][k]) <= 0.05);
      double var = 0.0;
      for (std::size_t s = burn_in + 1; s < traj.snapshots.size(); ++s) {
        const double d = traj.snapshots[s][i][k] - mean;
        var += d * d;
      }
      pooled_var += var / (n - 1.0);
    }
  }
  pooled_var /= 6.0;
  CHECK(pooled_var >= 0.75 * stat_var);
  CHECK(pooled_var <= 1.25 * stat_var);
}

TEST_CASE("trajectory dumps cover every step, atom, and snapshot") {
  SyntheticSpec spec;
  spec.seed = 14;
  const Complex cx = make_synthetic_complex(spec);
  const Neighborhood neigh = site_neighborhood(cx, 3);
  Rng rng(25);
  const EnergyModel model = init_energy_model(small_config(), rng);
  LangevinConfig cfg;
  cfg.steps = 3;
  const SampleResult result = langevin_sample(neigh, model, cfg);
  testing::TempDir dir("traj");
  const auto path = dir.path() / "trajectory.csv";
  write_trajectory_csv(path, neigh, result.trajectory);
  const std::string text = testing::read_file(path);
  std::size_t lines = 0;
  for (const char ch : text) lines += ch == '\n' ? 1 : 0;
  CHECK(lines == 1 + 4 * neigh.member_count() * result.trajectory.snapshots.size());
  CHECK(text.rfind("step,residue,atom,x,y,z\n", 0) == 0);
}
