#include "fixtures.hpp"

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ddgkit/aa.hpp"
#include "ddgkit/synthetic.hpp"

namespace fs = std::filesystem;

namespace ddgkit::testing {

TempDir::TempDir(const std::string& tag) {
  static std::atomic<unsigned> counter{0};
  const unsigned n = counter.fetch_add(1);
  path_ = fs::temp_directory_path() /
          ("ddgkit-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
           std::to_string(n));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

Eigen::Matrix3d random_rotation(Rng& rng) {
  Eigen::Vector4d q;
  do {
    for (int i = 0; i < 4; ++i) q[i] = rng.normal();
  } while (q.norm() < 1e-6);
  q.normalize();
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Eigen::Matrix3d R;
  R << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return R;
}

Complex rigid_transform(const Complex& cx, const Eigen::Matrix3d& R,
                        const Eigen::Vector3d& t) {
  Complex out = cx;
  for (auto& chain : out.chains) {
    for (auto& res : chain.residues) {
      for (auto& atom : res.backbone) atom = R * atom + t;
    }
  }
  return out;
}

std::string aa_three_letter(int aa) {
  static const char* kNames[20] = {"ALA", "CYS", "ASP", "GLU", "PHE",
                                   "GLY", "HIS", "ILE", "LYS", "LEU",
                                   "MET", "ASN", "PRO", "GLN", "ARG",
                                   "SER", "THR", "VAL", "TRP", "TYR"};
  if (aa < 1 || aa > 20) throw std::out_of_range("aa_three_letter");
  return kNames[aa - 1];
}

std::string to_pdb_text(const Complex& cx) {
  std::string out;
  int serial = 1;
  char buf[96];
  for (const auto& chain : cx.chains) {
    for (const auto& res : chain.residues) {
      for (int a = 0; a < kBackboneAtoms; ++a) {
        if (!res.atom_present[static_cast<std::size_t>(a)]) continue;
        const Eigen::Vector3d& p = res.backbone[static_cast<std::size_t>(a)];
        std::snprintf(buf, sizeof buf,
                      "ATOM  %5d %-4s%c%3s %c%4d%c   %8.3f%8.3f%8.3f%6.2f%6.2f\n",
                      serial++, kBackboneAtomNames[static_cast<std::size_t>(a)],
                      ' ', aa_three_letter(res.aa_type).c_str(), res.chain_id,
                      res.seq_index, res.icode, p.x(), p.y(), p.z(), 1.0, 0.0);
        out += buf;
      }
    }
  }
  out += "END\n";
  return out;
}

void write_pdb_file(const fs::path& path, const Complex& cx) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << to_pdb_text(cx);
}

FixtureSet make_fixture_set(const fs::path& dir, const FixtureSpec& spec) {
  FixtureSet set;
  set.structures_dir = dir / "structures";
  fs::create_directories(set.structures_dir);
  Rng rng(spec.seed * 1000003ULL + 7);

  std::ostringstream csv;
  csv << "pdb_id,binder_chains,target_chains,mutations,ddg\n";

  for (int c = 0; c < spec.n_complexes; ++c) {
    SyntheticSpec syn;
    syn.n_binder = spec.n_binder;
    syn.n_target = spec.n_target;
    syn.seed = spec.seed * 131 + static_cast<std::uint64_t>(c);
    syn.pdb_id = "SYN" + std::to_string(c);
    Complex cx = make_synthetic_complex(syn);
    write_pdb_file(set.structures_dir / (syn.pdb_id + ".pdb"), cx);

    for (int r = 0; r < spec.records_per_complex; ++r) {
      const auto& chain =
          cx.chains[static_cast<std::size_t>(rng.uniform_int(0, 1))];
      const auto& res = chain.residues[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(chain.residues.size()) -
                                 1))];
      int mut = res.aa_type;
      while (mut == res.aa_type) {
        mut = static_cast<int>(rng.uniform_int(1, kNumAminoAcids));
      }
      SkempiRecord rec;
      rec.pdb_id = syn.pdb_id;
      rec.binder_chains = cx.binder_chains;
      rec.target_chains = cx.target_chains;
      rec.mutations = {{res.aa_type, res.chain_id, res.seq_index, mut}};
      rec.ddg_label = rng.uniform(-2.0, 2.0);
      rec.split_key = syn.pdb_id;
      set.records.push_back(rec);

      csv << rec.pdb_id << ",A,B," << aa_to_letter(res.aa_type)
          << res.chain_id << res.seq_index << aa_to_letter(mut) << ','
          << rec.ddg_label << '\n';
    }
    set.complexes.push_back(std::move(cx));
  }

  set.skempi_csv = dir / "records.csv";
  std::ofstream f(set.skempi_csv);
  if (!f) throw std::runtime_error("cannot write " + set.skempi_csv.string());
  f << csv.str();
  return set;
}

void write_logprob_csv(const fs::path& path,
                       const std::vector<Complex>& complexes,
                       std::uint64_t seed) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "complex_id,state,chain,position,insertion_code,aa,logp\n";
  Rng rng(seed ^ 0x5eedf11eULL);
  char buf[40];
  for (const auto& cx : complexes) {
    for (const char* state : {"bound", "unbound"}) {
      for (const auto& chain : cx.chains) {
        for (const auto& res : chain.residues) {
          double p[20];
          double total = 0.0;
          for (double& v : p) {
            v = 0.05 + rng.uniform();
            total += v;
          }
          for (int a = 0; a < 20; ++a) {
            std::snprintf(buf, sizeof buf, "%.17g", std::log(p[a] / total));
            f << cx.pdb_id << ',' << state << ',' << res.chain_id << ','
              << res.seq_index << ",," << aa_to_letter(a + 1) << ',' << buf
              << '\n';
          }
        }
      }
    }
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace ddgkit::testing
