#include "ddgkit/aa.hpp"

#include <array>
#include <cctype>

#include "ddgkit/error.hpp"

namespace ddgkit {

namespace {

constexpr std::array<char, 20> kLetters = {
    'A', 'C', 'D', 'E', 'F', 'G', 'H', 'I', 'K', 'L',
    'M', 'N', 'P', 'Q', 'R', 'S', 'T', 'V', 'W', 'Y'};

constexpr std::array<std::string_view, 20> kThreeLetter = {
    "ALA", "CYS", "ASP", "GLU", "PHE", "GLY", "HIS", "ILE", "LYS", "LEU",
    "MET", "ASN", "PRO", "GLN", "ARG", "SER", "THR", "VAL", "TRP", "TYR"};

}  // namespace

int aa_from_letter(char c) {
  const char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (int i = 0; i < kNumAminoAcids; ++i) {
    if (kLetters[static_cast<std::size_t>(i)] == u) return i + 1;
  }
  throw IngestError(std::string("unknown amino-acid letter '") + c + "'");
}

char aa_to_letter(int aa) {
  if (aa < 1 || aa > kNumAminoAcids) {
    throw IngestError("amino-acid type out of range: " + std::to_string(aa));
  }
  return kLetters[static_cast<std::size_t>(aa - 1)];
}

int aa_try_from_three_letter(std::string_view name) {
  for (int i = 0; i < kNumAminoAcids; ++i) {
    if (kThreeLetter[static_cast<std::size_t>(i)] == name) return i + 1;
  }
  return 0;
}

}  // namespace ddgkit
