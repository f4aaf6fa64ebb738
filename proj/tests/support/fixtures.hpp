// Shared helpers for the test suites: scoped temp directories, seeded
// random rigid transforms, PDB/CSV fixture writers built around the
// synthetic complex generator.
#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <string>
#include <vector>

#include "ddgkit/rng.hpp"
#include "ddgkit/types.hpp"

namespace ddgkit::testing {

// Unique directory under the system temp root, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();

  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Uniform random rotation via a normalized quaternion.
Eigen::Matrix3d random_rotation(Rng& rng);

// Applies x -> R x + t to every backbone atom of every residue.
Complex rigid_transform(const Complex& cx, const Eigen::Matrix3d& R,
                        const Eigen::Vector3d& t);

std::string aa_three_letter(int aa);

// Fixed-column PDB text for the complex's backbone atoms, parseable by
// parse_pdb. Coordinates are written at the format's 3-decimal
// precision, so round-tripped complexes are not bitwise equal to the
// input; fixtures that need exact coordinates must re-parse.
std::string to_pdb_text(const Complex& cx);
void write_pdb_file(const std::filesystem::path& path, const Complex& cx);

// A small labeled dataset on disk: one synthetic complex per pdb id,
// single-point mutation records with random labels.
struct FixtureSet {
  std::vector<Complex> complexes;           // as generated (pre-PDB precision)
  std::vector<SkempiRecord> records;
  std::filesystem::path structures_dir;
  std::filesystem::path skempi_csv;
};

struct FixtureSpec {
  int n_complexes = 3;
  int records_per_complex = 4;
  int n_binder = 5;
  int n_target = 5;
  std::uint64_t seed = 0;
};

FixtureSet make_fixture_set(const std::filesystem::path& dir,
                            const FixtureSpec& spec);

// Normalized random 20-way log-probability tables for every residue of
// every complex, both states, in the file-provider CSV schema.
void write_logprob_csv(const std::filesystem::path& path,
                       const std::vector<Complex>& complexes,
                       std::uint64_t seed);

std::string read_file(const std::filesystem::path& path);

}  // namespace ddgkit::testing
