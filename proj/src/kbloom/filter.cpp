#include <algorithm>
#include <bit>
#include <cmath>
#include <set>

#include "chaintrace/errors.hpp"
#include "chaintrace/kbloom.hpp"

namespace chaintrace::kbloom {
namespace {

constexpr std::size_t word_count(std::size_t m) { return (m + 63) / 64; }

void require_same_length(const KeyedBloomFilter& a, const KeyedBloomFilter& b) {
  if (a.size() != b.size()) {
    throw StructuralError("filter length mismatch: " + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()));
  }
}

void require_consistent(const FilterParams& params, const SecretKeySet& keys) {
  if (keys.size() != params.secret_key_count()) {
    throw ParameterError("key set size does not match filter parameters");
  }
}

}  // namespace

FilterParams::FilterParams(PublicFilterParams pub, std::uint32_t k) : pub_(std::move(pub)), k_(k) {
  if (pub_.m == 0) throw ParameterError("filter length m must be positive");
  if (pub_.key_bounds.min < 1 || pub_.key_bounds.min > pub_.key_bounds.max) {
    throw ParameterError("key bounds must satisfy 1 <= k_min <= k_max");
  }
  if (k_ < pub_.key_bounds.min || k_ > pub_.key_bounds.max) {
    throw ParameterError("key count outside public bounds");
  }
  // Rejects unknown hash names early.
  static constexpr std::uint8_t probe[1] = {0};
  (void)hmac(pub_.hash_name, probe, probe);
}

SecretKeySet::SecretKeySet(std::vector<Bytes> keys) : keys_(std::move(keys)) {
  if (keys_.empty()) throw ParameterError("secret key set is empty");
  std::set<Bytes> seen(keys_.begin(), keys_.end());
  if (seen.size() != keys_.size()) throw ParameterError("secret keys must be distinct");
}

FilterSetup setup(std::size_t m, KeyBounds bounds, Rng& rng, std::string_view hash_name) {
  if (m == 0) throw ParameterError("filter length m must be positive");
  if (bounds.min < 1 || bounds.min > bounds.max) {
    throw ParameterError("key bounds must satisfy 1 <= k_min <= k_max");
  }
  const auto k = static_cast<std::uint32_t>(rng.uniform(bounds.min, bounds.max));
  std::vector<Bytes> keys;
  std::set<Bytes> seen;
  while (keys.size() < k) {
    Bytes key(kKeyBytes);
    rng.fill(key);
    if (seen.insert(key).second) keys.push_back(std::move(key));
  }
  return FilterSetup{FilterParams(PublicFilterParams{m, std::string(hash_name), bounds}, k),
                     SecretKeySet(std::move(keys))};
}

KeyedBloomFilter::KeyedBloomFilter(std::size_t m) : m_(m), words_(word_count(m), 0) {
  if (m == 0) throw ParameterError("filter length m must be positive");
}

bool KeyedBloomFilter::test(std::size_t index) const {
  if (index >= m_) throw StructuralError("filter index out of range");
  return (words_[index / 64] >> (index % 64)) & 1U;
}

void KeyedBloomFilter::set(std::size_t index) {
  if (index >= m_) throw StructuralError("filter index out of range");
  words_[index / 64] |= std::uint64_t{1} << (index % 64);
}

std::size_t KeyedBloomFilter::popcount() const noexcept {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

bool KeyedBloomFilter::all_zero() const noexcept {
  return std::all_of(words_.begin(), words_.end(), [](std::uint64_t w) { return w == 0; });
}

void KeyedBloomFilter::clear_padding() noexcept {
  const std::size_t tail = m_ % 64;
  if (tail != 0) words_.back() &= (std::uint64_t{1} << tail) - 1;
}

std::vector<std::size_t> bit_positions(const FilterParams& params, const SecretKeySet& keys,
                                       ByteView element) {
  require_consistent(params, keys);
  std::vector<std::size_t> out;
  out.reserve(keys.size());
  for (const auto& key : keys.keys()) {
    out.push_back(bit_index(params.hash_name(), key, element, params.m()));
  }
  return out;
}

KeyedBloomFilter create(const FilterParams& params, const SecretKeySet& keys,
                        std::span<const Bytes> elements) {
  require_consistent(params, keys);
  KeyedBloomFilter filter(params.m());
  for (const auto& element : elements) {
    for (auto index : bit_positions(params, keys, element)) filter.set(index);
  }
  return filter;
}

KeyedBloomFilter insert(const KeyedBloomFilter& filter, const FilterParams& params,
                        const SecretKeySet& keys, ByteView element) {
  if (filter.size() != params.m()) throw StructuralError("filter length does not match params");
  KeyedBloomFilter out = filter;
  for (auto index : bit_positions(params, keys, element)) out.set(index);
  return out;
}

bool contains(const KeyedBloomFilter& filter, const FilterParams& params,
              const SecretKeySet& keys, ByteView element) {
  if (filter.size() != params.m()) throw StructuralError("filter length does not match params");
  const auto positions = bit_positions(params, keys, element);
  return std::all_of(positions.begin(), positions.end(),
                     [&](std::size_t i) { return filter.test(i); });
}

KeyedBloomFilter inc(const KeyedBloomFilter& a, const KeyedBloomFilter& b) {
  require_same_length(a, b);
  KeyedBloomFilter out(a.size());
  for (std::size_t w = 0; w < out.words_.size(); ++w) out.words_[w] = ~a.words_[w] | b.words_[w];
  out.clear_padding();
  return out;
}

KeyedBloomFilter inc_indexwise(const KeyedBloomFilter& a, const KeyedBloomFilter& b) {
  require_same_length(a, b);
  KeyedBloomFilter out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a.test(i) && !b.test(i))) out.set(i);
  }
  return out;
}

SubsetVerdict is_subset(const KeyedBloomFilter& a, const KeyedBloomFilter& b) {
  return inc(a, b).all_ones() ? SubsetVerdict::SubsetLikely : SubsetVerdict::NotSubset;
}

double fp_rate(std::size_t m, std::uint32_t k, std::size_t n) {
  if (m == 0 || k == 0) throw ParameterError("fp_rate requires positive m and k");
  const double fill = -std::expm1(-static_cast<double>(k) * static_cast<double>(n) /
                                  static_cast<double>(m));
  return std::pow(fill, static_cast<double>(k));
}

}  // namespace chaintrace::kbloom
