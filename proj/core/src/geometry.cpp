#include "ddgkit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "ddgkit/aa.hpp"
#include "ddgkit/error.hpp"

namespace ddgkit {

const std::array<std::pair<int, int>, kIntraAtomPairs> kIntraPairs = {
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

std::vector<ResidueKey> Neighborhood::site_keys() const {
  std::vector<ResidueKey> keys;
  for (const auto& m : members) {
    if (m.is_site) keys.push_back(m.key);
  }
  return keys;
}

std::vector<ResidueKey> Neighborhood::neighbor_keys() const {
  std::vector<ResidueKey> keys;
  for (const auto& m : members) {
    if (!m.is_site) keys.push_back(m.key);
  }
  return keys;
}

std::vector<Eigen::Vector3d> Neighborhood::coords() const {
  std::vector<Eigen::Vector3d> out;
  out.reserve(atom_count());
  for (const auto& m : members) {
    for (int a = 0; a < kBackboneAtoms; ++a) {
      out.push_back(m.backbone[static_cast<std::size_t>(a)]);
    }
  }
  return out;
}

std::vector<bool> Neighborhood::movable_atoms() const {
  std::vector<bool> out(atom_count(), false);
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (!members[i].is_site) continue;
    for (int a = 0; a < kBackboneAtoms; ++a) {
      out[i * kBackboneAtoms + static_cast<std::size_t>(a)] = true;
    }
  }
  return out;
}

std::size_t Neighborhood::member_index(const ResidueKey& key) const {
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (members[i].key == key) return i;
  }
  return members.size();
}

namespace {

NeighborEntry make_entry(const Complex& cx, const Residue& r, bool is_site) {
  NeighborEntry e;
  e.key = r.key();
  e.aa_type = r.aa_type;
  e.is_binder = cx.in_binder(r.chain_id);
  e.is_target = cx.in_target(r.chain_id);
  e.is_site = is_site;
  e.backbone = r.backbone;
  return e;
}

}  // namespace

Neighborhood select_neighborhood_sites(const Complex& cx,
                                       const std::vector<ResidueKey>& sites,
                                       int k) {
  if (k < 0) throw NumericError("neighborhood size k must be >= 0");

  std::set<ResidueKey> site_set;
  std::vector<const Residue*> site_residues;
  for (const ResidueKey& key : sites) {
    const Residue* r = cx.find_residue(key);
    if (r == nullptr) {
      throw IngestError("mutation site " + to_string(key) +
                        " not present in complex " + cx.pdb_id);
    }
    if (!r->has_full_backbone()) {
      throw IngestError("mutation site " + to_string(key) +
                        " is missing backbone atoms (CA required, full "
                        "backbone needed for sampling)");
    }
    if (site_set.insert(key).second) site_residues.push_back(r);
  }

  // Candidates: every complete-backbone residue that is not a site.
  // Collected in key order so selection is independent of storage order.
  std::map<ResidueKey, const Residue*> candidates;
  for (const auto& chain : cx.chains) {
    for (const auto& r : chain.residues) {
      if (!r.has_full_backbone()) continue;
      if (site_set.count(r.key()) > 0) continue;
      candidates.emplace(r.key(), &r);
    }
  }

  std::set<ResidueKey> selected;
  for (const Residue* site : site_residues) {
    std::vector<std::pair<double, ResidueKey>> dists;
    dists.reserve(candidates.size());
    for (const auto& [key, r] : candidates) {
      dists.emplace_back((r->ca() - site->ca()).norm(), key);
    }
    // Ties fall back to key order, making the choice deterministic.
    std::sort(dists.begin(), dists.end(),
              [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first < b.first;
                return a.second < b.second;
              });
    const std::size_t take =
        std::min<std::size_t>(static_cast<std::size_t>(k), dists.size());
    for (std::size_t i = 0; i < take; ++i) selected.insert(dists[i].second);
  }

  Neighborhood neigh;
  std::map<ResidueKey, NeighborEntry> ordered;
  for (const Residue* r : site_residues) {
    ordered.emplace(r->key(), make_entry(cx, *r, true));
  }
  for (const ResidueKey& key : selected) {
    ordered.emplace(key, make_entry(cx, *candidates.at(key), false));
  }
  neigh.members.reserve(ordered.size());
  for (auto& [key, entry] : ordered) neigh.members.push_back(entry);
  return neigh;
}

Neighborhood select_neighborhood(const Complex& cx, const MutationSet& muts,
                                 int k) {
  std::vector<ResidueKey> sites;
  sites.reserve(muts.size());
  for (const Mutation& m : muts) sites.push_back(m.key());
  return select_neighborhood_sites(cx, sites, k);
}

void rbf_expand(double d, std::span<const double> centers, double gamma,
                std::span<double> out) {
  const double inv = 1.0 / (2.0 * gamma * gamma);
  for (std::size_t m = 0; m < centers.size(); ++m) {
    const double delta = d - centers[m];
    out[m] = std::exp(-delta * delta * inv);
  }
}

std::vector<double> RbfSpec::centers() const {
  std::vector<double> mu(static_cast<std::size_t>(n_rbf), 0.0);
  if (n_rbf == 1) return mu;
  const double step = r_max / static_cast<double>(n_rbf - 1);
  for (int m = 0; m < n_rbf; ++m) {
    mu[static_cast<std::size_t>(m)] = step * static_cast<double>(m);
  }
  return mu;
}

void rbf_expand(double d, const RbfSpec& spec, std::span<double> out) {
  const std::vector<double> mu = spec.centers();
  rbf_expand(std::min(d, spec.r_max), mu, spec.gamma(), out);
}

namespace {

InvariantFeatures featurize_impl(const Neighborhood& neigh,
                                 const RbfSpec& spec,
                                 std::span<const Eigen::Vector3d> coords) {
  const auto n = static_cast<int>(neigh.member_count());
  const int K = spec.n_rbf;
  InvariantFeatures f;
  f.n_members = n;
  f.n_rbf = K;
  f.inter = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n) * n,
                                  static_cast<Eigen::Index>(kInterAtomPairs) * K);
  f.intra = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(kIntraAtomPairs) * K);
  f.aa_onehot = Eigen::MatrixXd::Zero(n, kNumAminoAcids);
  f.group = Eigen::MatrixXd::Zero(n, 2);

  const std::vector<double> mu = spec.centers();
  const double gamma = spec.gamma();
  std::vector<double> buf(static_cast<std::size_t>(K));

  auto atom = [&](int i, int a) -> const Eigen::Vector3d& {
    return coords[static_cast<std::size_t>(i) * kBackboneAtoms +
                  static_cast<std::size_t>(a)];
  };

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const Eigen::Index row = static_cast<Eigen::Index>(i) * n + j;
      for (int a = 0; a < kBackboneAtoms; ++a) {
        for (int b = 0; b < kBackboneAtoms; ++b) {
          const double d = (atom(i, a) - atom(j, b)).norm();
          rbf_expand(std::min(d, spec.r_max), mu, gamma, buf);
          const Eigen::Index col0 = static_cast<Eigen::Index>(a * 4 + b) * K;
          for (int m = 0; m < K; ++m) {
            f.inter(row, col0 + m) = buf[static_cast<std::size_t>(m)];
          }
        }
      }
    }
    for (int p = 0; p < kIntraAtomPairs; ++p) {
      const auto [a, b] = kIntraPairs[static_cast<std::size_t>(p)];
      const double d = (atom(i, a) - atom(i, b)).norm();
      rbf_expand(std::min(d, spec.r_max), mu, gamma, buf);
      const Eigen::Index col0 = static_cast<Eigen::Index>(p) * K;
      for (int m = 0; m < K; ++m) {
        f.intra(i, col0 + m) = buf[static_cast<std::size_t>(m)];
      }
    }
    const NeighborEntry& e = neigh.members[static_cast<std::size_t>(i)];
    f.aa_onehot(i, e.aa_type - 1) = 1.0;
    if (e.is_binder) f.group(i, 0) = 1.0;
    if (e.is_target) f.group(i, 1) = 1.0;
  }
  return f;
}

}  // namespace

InvariantFeatures featurize(const Neighborhood& neigh, const RbfSpec& spec) {
  const std::vector<Eigen::Vector3d> coords = neigh.coords();
  return featurize_impl(neigh, spec, coords);
}

InvariantFeatures featurize_at(const Neighborhood& neigh, const RbfSpec& spec,
                               std::span<const Eigen::Vector3d> coords) {
  if (coords.size() != neigh.atom_count()) {
    throw NumericError("featurize_at: coordinate override has " +
                       std::to_string(coords.size()) + " atoms, expected " +
                       std::to_string(neigh.atom_count()));
  }
  return featurize_impl(neigh, spec, coords);
}

}  // namespace ddgkit
