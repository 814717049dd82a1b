#pragma once

// Keyed Bloom filters: one HMAC under k secret keys, with k itself drawn
// privately from public bounds. Only the key holder can place elements;
// anyone holding two filters of equal length can evaluate inclusiveness.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chaintrace/rng.hpp"

namespace chaintrace::kbloom {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline constexpr std::string_view kDefaultHash = "HMAC-SHA256";
inline constexpr std::size_t kDefaultBits = 1024;
inline constexpr std::size_t kKeyBytes = 32;

/// Inclusive public range from which the secret key count is drawn.
struct KeyBounds {
  std::uint32_t min = 4;
  std::uint32_t max = 8;

  friend bool operator==(const KeyBounds&, const KeyBounds&) = default;
};

/// Everything about the filter construction that may leave the telco.
struct PublicFilterParams {
  std::size_t m = kDefaultBits;
  std::string hash_name{kDefaultHash};
  KeyBounds key_bounds;

  friend bool operator==(const PublicFilterParams&, const PublicFilterParams&) = default;
};

/// Full setup parameters including the secret key count. Telco-side only.
class FilterParams {
 public:
  FilterParams(PublicFilterParams pub, std::uint32_t k);

  const PublicFilterParams& public_part() const noexcept { return pub_; }
  std::size_t m() const noexcept { return pub_.m; }
  const std::string& hash_name() const noexcept { return pub_.hash_name; }
  KeyBounds key_bounds() const noexcept { return pub_.key_bounds; }

  /// The secret k. Callers outside the telco boundary never see this object.
  std::uint32_t secret_key_count() const noexcept { return k_; }

 private:
  PublicFilterParams pub_;
  std::uint32_t k_;
};

/// Ordered, pairwise distinct HMAC keys.
class SecretKeySet {
 public:
  explicit SecretKeySet(std::vector<Bytes> keys);

  std::size_t size() const noexcept { return keys_.size(); }
  const Bytes& operator[](std::size_t i) const { return keys_.at(i); }
  std::span<const Bytes> keys() const noexcept { return keys_; }

 private:
  std::vector<Bytes> keys_;
};

struct FilterSetup {
  FilterParams params;
  SecretKeySet keys;
};

/// Draws k uniformly from `bounds` and k distinct random keys.
FilterSetup setup(std::size_t m, KeyBounds bounds, Rng& rng,
                  std::string_view hash_name = kDefaultHash);

/// Fixed-length bit array. Bit i lives in word i / 64 at bit i % 64.
class KeyedBloomFilter {
 public:
  explicit KeyedBloomFilter(std::size_t m);

  std::size_t size() const noexcept { return m_; }
  bool test(std::size_t index) const;
  void set(std::size_t index);
  std::size_t popcount() const noexcept;
  bool all_ones() const noexcept { return popcount() == m_; }
  bool all_zero() const noexcept;

  std::span<const std::uint64_t> words() const noexcept { return words_; }

  friend bool operator==(const KeyedBloomFilter&, const KeyedBloomFilter&) = default;

 private:
  friend KeyedBloomFilter inc(const KeyedBloomFilter&, const KeyedBloomFilter&);
  friend KeyedBloomFilter deserialize(ByteView);

  void clear_padding() noexcept;

  std::size_t m_;
  std::vector<std::uint64_t> words_;
};

/// Raw keyed MAC. Supports HMAC-SHA224/256/384/512.
Bytes hmac(std::string_view hash_name, ByteView key, ByteView data);

/// Filter index of `element` under one key: first 8 MAC bytes, big-endian, mod m.
std::size_t bit_index(std::string_view hash_name, ByteView key, ByteView element, std::size_t m);

/// One index per key, in key order (duplicates possible).
std::vector<std::size_t> bit_positions(const FilterParams& params, const SecretKeySet& keys,
                                       ByteView element);

KeyedBloomFilter create(const FilterParams& params, const SecretKeySet& keys,
                        std::span<const Bytes> elements);

/// Returns a copy of `filter` with `element` added. Idempotent.
KeyedBloomFilter insert(const KeyedBloomFilter& filter, const FilterParams& params,
                        const SecretKeySet& keys, ByteView element);

/// Membership test. Requires the keys, so it is a telco-side operation.
bool contains(const KeyedBloomFilter& filter, const FilterParams& params,
              const SecretKeySet& keys, ByteView element);

/// INC(a, b) = NOT(a) OR b, evaluated a word at a time.
KeyedBloomFilter inc(const KeyedBloomFilter& a, const KeyedBloomFilter& b);

/// INC by its per-index definition: 0 where a has 1 and b has 0, else 1.
KeyedBloomFilter inc_indexwise(const KeyedBloomFilter& a, const KeyedBloomFilter& b);

enum class SubsetVerdict {
  SubsetLikely,  // may be a false positive
  NotSubset,     // certain
};

SubsetVerdict is_subset(const KeyedBloomFilter& a, const KeyedBloomFilter& b);

/// Standard estimate (1 - e^(-kn/m))^k.
double fp_rate(std::size_t m, std::uint32_t k, std::size_t n);

// Wire format: "KBF1", m as u64 big-endian, 4 zero bytes, then ceil(m/8)
// payload bytes where bit j of byte i is filter index 8i + j.
inline constexpr std::size_t kHeaderBytes = 16;

Bytes serialize(const KeyedBloomFilter& filter);
KeyedBloomFilter deserialize(ByteView bytes);

void write_filter(const std::filesystem::path& path, const KeyedBloomFilter& filter);
KeyedBloomFilter read_filter(const std::filesystem::path& path);

}  // namespace chaintrace::kbloom
