#include "ddgkit/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "ddgkit/error.hpp"

namespace ddgkit {

namespace {

constexpr char kMagic[8] = {'D', 'D', 'G', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms unsupported");

template <typename T>
T byteswap_if_big(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    T out;
    auto* src = reinterpret_cast<const unsigned char*>(&v);
    auto* dst = reinterpret_cast<unsigned char*>(&out);
    for (std::size_t i = 0; i < sizeof(T); ++i) dst[i] = src[sizeof(T) - 1 - i];
    return out;
  }
}

template <typename T>
void write_le(std::ostream& out, T v) {
  const T le = byteswap_if_big(v);
  out.write(reinterpret_cast<const char*>(&le), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const std::filesystem::path& path) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("truncated checkpoint: " + path.string());
  return byteswap_if_big(v);
}

void write_f64_le(std::ostream& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof(bits));
  write_le(out, bits);
}

double read_f64_le(std::istream& in, const std::filesystem::path& path) {
  const std::uint64_t bits = read_le<std::uint64_t>(in, path);
  double d;
  std::memcpy(&d, &bits, sizeof(d));
  return d;
}

}  // namespace

std::size_t CheckpointEntry::size() const {
  std::size_t n = 1;
  for (const auto d : shape) n *= static_cast<std::size_t>(d);
  return shape.empty() ? 0 : n;
}

void write_checkpoint(const std::filesystem::path& path,
                      const std::vector<CheckpointEntry>& entries) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_le(out, kVersion);
  write_le(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    if (e.data.size() != e.size()) {
      throw IoError("checkpoint entry '" + e.name + "' has " +
                    std::to_string(e.data.size()) + " values but shape implies " +
                    std::to_string(e.size()));
    }
    write_le(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    write_le(out, static_cast<std::uint32_t>(e.shape.size()));
    for (const auto d : e.shape) write_le(out, d);
  }
  for (const auto& e : entries) {
    for (const double d : e.data) write_f64_le(out, d);
  }
  if (!out) throw IoError("failed writing checkpoint: " + path.string());
}

std::vector<CheckpointEntry> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError("not a checkpoint file (bad magic): " + path.string());
  }
  const auto version = read_le<std::uint32_t>(in, path);
  if (version != kVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version) +
                  ": " + path.string());
  }
  const auto n_entries = read_le<std::uint32_t>(in, path);
  std::vector<CheckpointEntry> entries(n_entries);
  for (auto& e : entries) {
    const auto name_len = read_le<std::uint32_t>(in, path);
    e.name.resize(name_len);
    in.read(e.name.data(), name_len);
    if (!in) throw IoError("truncated checkpoint: " + path.string());
    const auto rank = read_le<std::uint32_t>(in, path);
    e.shape.resize(rank);
    for (auto& d : e.shape) d = read_le<std::uint64_t>(in, path);
  }
  for (auto& e : entries) {
    e.data.resize(e.size());
    for (auto& d : e.data) d = read_f64_le(in, path);
  }
  return entries;
}

std::vector<CheckpointEntry> checkpoint_entries(const ParamSet& params) {
  std::vector<CheckpointEntry> entries;
  entries.reserve(params.entries().size());
  for (const auto& p : params.entries()) {
    CheckpointEntry e;
    e.name = p.name;
    e.shape = p.shape;
    e.data.assign(p.value, p.value + p.size);
    entries.push_back(std::move(e));
  }
  return entries;
}

void load_checkpoint_into(const std::vector<CheckpointEntry>& entries,
                          ParamSet& params) {
  for (const auto& p : params.entries()) {
    const CheckpointEntry* found = nullptr;
    for (const auto& e : entries) {
      if (e.name == p.name) {
        found = &e;
        break;
      }
    }
    if (found == nullptr) {
      throw IoError("checkpoint missing parameter '" + p.name + "'");
    }
    if (found->shape != p.shape) {
      throw IoError("checkpoint shape mismatch for '" + p.name + "'");
    }
    std::copy(found->data.begin(), found->data.end(), p.value);
  }
}

double checkpoint_scalar(const std::vector<CheckpointEntry>& entries,
                         const std::string& name) {
  for (const auto& e : entries) {
    if (e.name == name) {
      if (e.data.size() != 1) {
        throw IoError("checkpoint entry '" + name + "' is not a scalar");
      }
      return e.data[0];
    }
  }
  throw IoError("checkpoint missing entry '" + name + "'");
}

bool checkpoint_has(const std::vector<CheckpointEntry>& entries,
                    const std::string& name) {
  for (const auto& e : entries) {
    if (e.name == name) return true;
  }
  return false;
}

}  // namespace ddgkit
