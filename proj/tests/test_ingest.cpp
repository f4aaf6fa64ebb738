#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest/doctest.h>

#include <set>
#include <sstream>
#include <string>

#include "ddgkit/aa.hpp"
#include "ddgkit/error.hpp"
#include "ddgkit/mutation.hpp"
#include "ddgkit/pdb.hpp"
#include "ddgkit/rng.hpp"
#include "ddgkit/skempi.hpp"
#include "ddgkit/synthetic.hpp"
#include "ddgkit/types.hpp"
#include "support/fixtures.hpp"

using namespace ddgkit;

TEST_CASE("amino acid alphabet is the alphabetical one-letter order") {
  CHECK(aa_from_letter('A') == 1);
  CHECK(aa_from_letter('C') == 2);
  CHECK(aa_from_letter('Y') == 20);
  for (int aa = 1; aa <= kNumAminoAcids; ++aa) {
    CHECK(aa_from_letter(aa_to_letter(aa)) == aa);
  }
  CHECK_THROWS_AS(aa_from_letter('X'), IngestError);
  CHECK_THROWS_AS(aa_from_letter('B'), IngestError);
  CHECK(aa_try_from_three_letter("ALA") == 1);
  CHECK(aa_try_from_three_letter("TRP") == aa_from_letter('W'));
  CHECK(aa_try_from_three_letter("HOH") == 0);
  for (int aa = 1; aa <= kNumAminoAcids; ++aa) {
    CHECK(aa_try_from_three_letter(testing::aa_three_letter(aa)) == aa);
  }
}

TEST_CASE("mutation codes parse into typed tuples") {
  const Mutation m = parse_mutation("TH31W");
  CHECK(m.wt_aa == aa_from_letter('T'));
  CHECK(m.chain_id == 'H');
  CHECK(m.seq_index == 31);
  CHECK(m.mut_aa == aa_from_letter('W'));

  const Mutation p = parse_mutation("PI14G");
  CHECK(p.wt_aa == aa_from_letter('P'));
  CHECK(p.chain_id == 'I');
  CHECK(p.seq_index == 14);
  CHECK(p.mut_aa == aa_from_letter('G'));

  CHECK_THROWS_AS(parse_mutation("XH31W"), IngestError);
  CHECK_THROWS_AS(parse_mutation("TH31X"), IngestError);
  CHECK_THROWS_AS(parse_mutation("THXXW"), IngestError);
  CHECK_THROWS_AS(parse_mutation("TH31T"), IngestError);  // wt == mut
  CHECK_THROWS_AS(parse_mutation("T3W"), IngestError);    // too short

  // The chain field is a raw character, so a digit there is legal and
  // the position is whatever digits remain.
  const Mutation d = parse_mutation("T31W");
  CHECK(d.chain_id == '3');
  CHECK(d.seq_index == 1);
}

TEST_CASE("mutation format round-trips over the whole alphabet") {
  Rng rng(11);
  for (int wt = 1; wt <= 20; ++wt) {
    for (int mut = 1; mut <= 20; ++mut) {
      if (wt == mut) continue;
      const int idx = static_cast<int>(rng.uniform_int(1, 9999));
      const std::string code = std::string(1, aa_to_letter(wt)) + "A" +
                               std::to_string(idx) + aa_to_letter(mut);
      const MutationSet parsed = parse_mutation_set(code);
      REQUIRE(parsed.size() == 1);
      CHECK(mutations_to_string(parsed) == code);
    }
  }
}

TEST_CASE("mutation sets split on commas and reject duplicate sites") {
  const MutationSet set = parse_mutation_set("TH31W,AH53F");
  REQUIRE(set.size() == 2);
  CHECK(set[0].seq_index == 31);
  CHECK(set[1].seq_index == 53);
  CHECK_THROWS_AS(parse_mutation_set("TH31W,AH31F"), IngestError);
}

namespace {

std::string atom_line(int serial, const char* name, const char* res,
                      char chain, int seq, double x, double y, double z) {
  char buf[96];
  std::snprintf(buf, sizeof buf,
                "ATOM  %5d %-4s%c%3s %c%4d%c   %8.3f%8.3f%8.3f%6.2f%6.2f\n",
                serial, name, ' ', res, chain, seq, ' ', x, y, z, 1.0, 0.0);
  return buf;
}

}  // namespace

TEST_CASE("pdb parsing keeps backbone atoms and missing-atom flags") {
  const std::string text = atom_line(1, "N", "GLY", 'A', 1, 1.0, 2.0, 3.0) +
                           atom_line(2, "CA", "GLY", 'A', 1, 4.0, 5.0, 6.0);
  std::istringstream in(text);
  const Complex cx = parse_pdb(in, "inline");
  REQUIRE(cx.chains.size() == 1);
  REQUIRE(cx.chains[0].residues.size() == 1);
  const Residue& res = cx.chains[0].residues[0];
  CHECK(res.aa_type == aa_from_letter('G'));
  CHECK(res.atom_present[0]);
  CHECK(res.atom_present[1]);
  CHECK_FALSE(res.atom_present[2]);
  CHECK_FALSE(res.atom_present[3]);
  CHECK(res.ca() == Eigen::Vector3d(4.0, 5.0, 6.0));
  CHECK_FALSE(res.has_full_backbone());
}

TEST_CASE("pdb chain-group assignment validates the requested chains") {
  const std::string text = atom_line(1, "CA", "ALA", 'A', 1, 0, 0, 0);
  CHECK_THROWS_AS(parse_pdb(text, {'A'}, {'B'}), IngestError);
  CHECK_THROWS_AS(parse_pdb(text, {'A'}, {'A'}), IngestError);
  CHECK_THROWS_AS(parse_pdb(text, {}, {'A'}), IngestError);
  CHECK_THROWS_AS(parse_pdb("END\n", {'A'}, {'B'}), IngestError);
}

TEST_CASE("pdb fixture with two chains lands in disjoint groups") {
  std::string text;
  text += atom_line(1, "CA", "ALA", 'A', 1, 0, 0, 0);
  text += atom_line(2, "CA", "GLY", 'A', 2, 3.8, 0, 0);
  text += atom_line(3, "CA", "TRP", 'B', 1, 0, 5, 0);
  const Complex cx = parse_pdb(text, {'A'}, {'B'});
  CHECK(cx.chains.size() == 2);
  CHECK(cx.residue_count() == 3);
  CHECK(cx.in_binder('A'));
  CHECK(cx.in_target('B'));
  CHECK_FALSE(cx.in_binder('B'));
}

TEST_CASE("pdb parser keeps the first altloc and skips unknown residues") {
  std::string text = atom_line(1, "CA", "ALA", 'A', 1, 1, 0, 0);
  std::string alt = atom_line(2, "CA", "ALA", 'A', 1, 9, 9, 9);
  alt[16] = 'B';  // altloc column
  text += alt;
  text += atom_line(3, "CA", "HOH", 'A', 2, 5, 5, 5);
  std::istringstream in(text);
  PdbStats stats;
  const Complex cx = parse_pdb(in, "inline", &stats);
  REQUIRE(cx.residue_count() == 1);
  CHECK(cx.chains[0].residues[0].ca() == Eigen::Vector3d(1, 0, 0));
  CHECK(stats.residues_skipped_unknown == 1);
}

TEST_CASE("pdb parser reads only the first model") {
  std::string text = atom_line(1, "CA", "ALA", 'A', 1, 1, 0, 0);
  text += "ENDMDL\n";
  text += atom_line(2, "CA", "GLY", 'A', 2, 2, 0, 0);
  std::istringstream in(text);
  const Complex cx = parse_pdb(in, "inline");
  CHECK(cx.residue_count() == 1);
}

TEST_CASE("pdb errors carry the source position") {
  std::string text = atom_line(1, "CA", "ALA", 'A', 1, 1, 0, 0);
  text += "ATOM      2  CA  ALA A   2\n";  // truncated before coordinates
  std::istringstream in(text);
  try {
    parse_pdb(in, "short.pdb");
    FAIL("expected IngestError");
  } catch (const IngestError& e) {
    CHECK(std::string(e.what()).find("short.pdb:2") != std::string::npos);
  }
}

TEST_CASE("pdb writer fixture round-trips through the parser") {
  SyntheticSpec spec;
  spec.seed = 3;
  const Complex cx = make_synthetic_complex(spec);
  std::istringstream in(testing::to_pdb_text(cx));
  Complex parsed = parse_pdb(in, "synthetic");
  assign_chain_groups(parsed, {'A'}, {'B'});
  REQUIRE(parsed.residue_count() == cx.residue_count());
  for (std::size_t c = 0; c < cx.chains.size(); ++c) {
    for (std::size_t r = 0; r < cx.chains[c].residues.size(); ++r) {
      const Residue& a = cx.chains[c].residues[r];
      const Residue& b = parsed.chains[c].residues[r];
      CHECK(a.aa_type == b.aa_type);
      CHECK(a.key() == b.key());
      for (int atom = 0; atom < kBackboneAtoms; ++atom) {
        // PDB text carries 3 decimals.
        CHECK((a.backbone[static_cast<std::size_t>(atom)] -
               b.backbone[static_cast<std::size_t>(atom)])
                  .cwiseAbs()
                  .maxCoeff() <= 5e-4);
      }
    }
  }
}

TEST_CASE("skempi rows parse mutations, labels, and split keys") {
  const std::string csv =
      "pdb_id,binder_chains,target_chains,mutations,ddg\n"
      "1ABC,A,B,TH31W;AH53F,1.25\n"
      "1ABC,A,B,PI14G,\n"
      "2XYZ,AB,C,TA1W,-0.5\n"
      "1ABC,A,B,TA7G,0.0\n";
  std::istringstream in(csv);
  const SkempiTable table = parse_skempi_table(in, "inline");
  REQUIRE(table.records.size() == 3);
  CHECK(table.dropped_missing_ddg == 1);
  CHECK(table.records[0].mutations.size() == 2);
  CHECK(table.records[0].ddg_label == 1.25);
  CHECK(table.records[1].pdb_id == "2XYZ");
  CHECK(table.records[1].binder_chains == std::set<char>{'A', 'B'});
  CHECK(table.records[0].split_key == table.records[2].split_key);
  CHECK(table.records[0].split_key != table.records[1].split_key);
}

TEST_CASE("skempi table rejects malformed headers and rows") {
  {
    std::istringstream in("pdb,chains,mutations,ddg\n");
    CHECK_THROWS_AS(parse_skempi_table(in, "x"), IngestError);
  }
  {
    std::istringstream in(
        "pdb_id,binder_chains,target_chains,mutations,ddg\n"
        "1ABC,A,B,XH31W,1.0\n");
    try {
      parse_skempi_table(in, "bad.csv");
      FAIL("expected IngestError");
    } catch (const IngestError& e) {
      CHECK(std::string(e.what()).find("bad.csv:2") != std::string::npos);
    }
  }
  {
    std::istringstream in(
        "pdb_id,binder_chains,target_chains,mutations,ddg\n"
        "1ABC,A,A,TH31W,1.0\n");  // overlapping groups
    CHECK_THROWS_AS(parse_skempi_table(in, "x"), IngestError);
  }
  {
    std::istringstream in(
        "pdb_id,binder_chains,target_chains,mutations,ddg\n"
        "1ABC,A,B,TH31W,nan\n");  // non-finite label
    CHECK_THROWS_AS(parse_skempi_table(in, "x"), IngestError);
  }
}

TEST_CASE("apply_mutation_set rewrites types and preserves coordinates") {
  SyntheticSpec spec;
  spec.seed = 5;
  const Complex cx = make_synthetic_complex(spec);

  SUBCASE("empty set is the identity") {
    const Complex out = apply_mutation_set(cx, {});
    CHECK(out.residue_count() == cx.residue_count());
    for (std::size_t c = 0; c < cx.chains.size(); ++c) {
      for (std::size_t r = 0; r < cx.chains[c].residues.size(); ++r) {
        CHECK(out.chains[c].residues[r].aa_type ==
              cx.chains[c].residues[r].aa_type);
      }
    }
  }

  SUBCASE("single mutation changes exactly one type, no coordinates") {
    const Residue& target = cx.chains[0].residues[2];
    Mutation m{target.aa_type, target.chain_id, target.seq_index,
               target.aa_type == 1 ? 2 : 1};
    const Complex out = apply_mutation_set(cx, {m});
    int diffs = 0;
    for (std::size_t c = 0; c < cx.chains.size(); ++c) {
      for (std::size_t r = 0; r < cx.chains[c].residues.size(); ++r) {
        const Residue& a = cx.chains[c].residues[r];
        const Residue& b = out.chains[c].residues[r];
        if (a.aa_type != b.aa_type) ++diffs;
        for (int atom = 0; atom < kBackboneAtoms; ++atom) {
          CHECK(a.backbone[static_cast<std::size_t>(atom)] ==
                b.backbone[static_cast<std::size_t>(atom)]);
        }
      }
    }
    CHECK(diffs == 1);
    CHECK(out.find_residue(m.key())->aa_type == m.mut_aa);
  }

  SUBCASE("wild-type mismatch is rejected") {
    const Residue& target = cx.chains[0].residues[2];
    const int wrong_wt = target.aa_type == 1 ? 2 : 1;
    Mutation m{wrong_wt, target.chain_id, target.seq_index,
               wrong_wt == 20 ? 1 : 20};
    CHECK_THROWS_AS(apply_mutation_set(cx, {m}), IngestError);
  }

  SUBCASE("missing site is rejected") {
    Mutation m{1, 'A', 9999, 2};
    CHECK_THROWS_AS(apply_mutation_set(cx, {m}), IngestError);
  }
}

TEST_CASE("restrict_to_chains keeps only the requested group") {
  SyntheticSpec spec;
  spec.seed = 9;
  const Complex cx = make_synthetic_complex(spec);
  const Complex only_a = restrict_to_chains(cx, {'A'});
  REQUIRE(only_a.chains.size() == 1);
  CHECK(only_a.chains[0].chain_id == 'A');
  CHECK(only_a.in_binder('A'));
  CHECK(only_a.residue_count() == cx.chains[0].residues.size());
}
