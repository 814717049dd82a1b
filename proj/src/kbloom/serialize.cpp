#include <fstream>
#include <iterator>

#include "chaintrace/errors.hpp"
#include "chaintrace/kbloom.hpp"

namespace chaintrace::kbloom {
namespace {

constexpr std::uint8_t kMagic[4] = {'K', 'B', 'F', '1'};

}  // namespace

Bytes serialize(const KeyedBloomFilter& filter) {
  const std::size_t m = filter.size();
  Bytes out(kHeaderBytes + (m + 7) / 8, 0);
  std::copy(std::begin(kMagic), std::end(kMagic), out.begin());
  const auto m64 = static_cast<std::uint64_t>(m);
  for (int i = 0; i < 8; ++i) out[4 + i] = static_cast<std::uint8_t>(m64 >> (56 - 8 * i));
  // bytes 12..15 reserved, zero
  const auto words = filter.words();
  for (std::size_t byte = 0; byte < (m + 7) / 8; ++byte) {
    out[kHeaderBytes + byte] = static_cast<std::uint8_t>(words[byte / 8] >> (8 * (byte % 8)));
  }
  return out;
}

KeyedBloomFilter deserialize(ByteView bytes) {
  if (bytes.size() < kHeaderBytes) throw ParseError("filter blob shorter than header", 0);
  if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw ParseError("bad filter magic", 0);
  }
  std::uint64_t m = 0;
  for (int i = 0; i < 8; ++i) m = (m << 8) | bytes[4 + i];
  for (int i = 12; i < 16; ++i) {
    if (bytes[i] != 0) throw ParseError("reserved header bytes must be zero", 0);
  }
  if (m == 0) throw ParseError("filter length must be positive", 0);
  const std::size_t payload = (m + 7) / 8;
  if (bytes.size() != kHeaderBytes + payload) throw ParseError("filter payload size mismatch", 0);

  KeyedBloomFilter filter(static_cast<std::size_t>(m));
  for (std::size_t byte = 0; byte < payload; ++byte) {
    filter.words_[byte / 8] |= std::uint64_t{bytes[kHeaderBytes + byte]} << (8 * (byte % 8));
  }
  const auto before = filter.words_;
  filter.clear_padding();
  if (before != filter.words_) throw ParseError("padding bits beyond m must be zero", 0);
  return filter;
}

void write_filter(const std::filesystem::path& path, const KeyedBloomFilter& filter) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const Bytes blob = serialize(filter);
  out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

KeyedBloomFilter read_filter(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Bytes blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(blob);
}

}  // namespace chaintrace::kbloom
