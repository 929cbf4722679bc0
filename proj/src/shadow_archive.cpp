#include <array>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "shadowphase/shadows.hpp"

namespace shadowphase {

namespace {

constexpr std::array<char, 8> kMagic{'S', 'P', 'S', 'H', 'A', 'D', 'O', 'W'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 8 + 4 + 4 + 8 + 8;
constexpr std::size_t kRecordBytes = 4 + 2;

template <typename T>
void put(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
  }
}

template <typename T>
T get(const std::string& in, std::size_t& pos) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  pos += sizeof(T);
  return static_cast<T>(v);
}

}  // namespace

void write_archive(const std::filesystem::path& path, const ShadowEnsemble& ens) {
  std::string buf(kMagic.begin(), kMagic.end());
  buf.reserve(kHeaderBytes + ens.size() * kRecordBytes);
  put<std::uint32_t>(buf, kVersion);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(ens.sites()));
  put<std::uint64_t>(buf, ens.size());
  put<std::uint64_t>(buf, ens.seed());
  const auto bases = ens.packed_bases();
  const auto outcomes = ens.packed_outcomes();
  for (std::size_t m = 0; m < ens.size(); ++m) {
    put<std::uint32_t>(buf, bases[m]);
    put<std::uint16_t>(buf, outcomes[m]);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ShadowError("cannot open " + path.string() + " for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw ShadowError("failed writing " + path.string());
}

ShadowEnsemble read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ShadowError("cannot open " + path.string());
  const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < kHeaderBytes || std::memcmp(buf.data(), kMagic.data(), kMagic.size()) != 0) {
    throw ShadowError(path.string() + " is not a shadow archive");
  }
  std::size_t pos = kMagic.size();
  const auto version = get<std::uint32_t>(buf, pos);
  if (version != kVersion) {
    throw ShadowError("unsupported shadow archive version " + std::to_string(version));
  }
  const auto n = get<std::uint32_t>(buf, pos);
  const auto T = get<std::uint64_t>(buf, pos);
  const auto seed = get<std::uint64_t>(buf, pos);
  if (T > (buf.size() - kHeaderBytes) / kRecordBytes ||
      buf.size() != kHeaderBytes + T * kRecordBytes) {
    throw ShadowError(path.string() + ": truncated or oversized archive");
  }
  std::vector<std::uint32_t> bases(T);
  std::vector<std::uint16_t> outcomes(T);
  for (std::size_t m = 0; m < T; ++m) {
    bases[m] = get<std::uint32_t>(buf, pos);
    outcomes[m] = get<std::uint16_t>(buf, pos);
  }
  return ShadowEnsemble(static_cast<int>(n), seed, std::move(bases), std::move(outcomes));
}

}  // namespace shadowphase
