#include <doctest.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <string>

#include "chaintrace/errors.hpp"
#include "chaintrace/kbloom.hpp"
#include "chaintrace/logmodel/types.hpp"

using namespace chaintrace;
using namespace chaintrace::kbloom;

namespace {

Bytes bytes_of(const std::string& s) { return Bytes(s.begin(), s.end()); }

Bytes random_element(Rng& rng) {
  Bytes out(12);
  rng.fill(out);
  return out;
}

FilterSetup fixed_setup(std::size_t m, std::uint32_t k, std::uint64_t seed = 1) {
  Rng rng(seed);
  return setup(m, {k, k}, rng);
}

// Direct OpenSSL HMAC-SHA256 index, bypassing the library's own MAC wrapper.
std::size_t oracle_index(const Bytes& key, const Bytes& element, std::size_t m) {
  unsigned char mac[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), element.data(), element.size(),
       mac, &len);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | mac[i];
  return static_cast<std::size_t>(v % m);
}

std::set<std::size_t> oracle_positions(const FilterSetup& s, const Bytes& element) {
  std::set<std::size_t> out;
  for (const auto& key : s.keys.keys()) out.insert(oracle_index(key, element, s.params.m()));
  return out;
}

KeyedBloomFilter random_bits(std::size_t m, Rng& rng, double density) {
  KeyedBloomFilter f(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (rng.unit() < density) f.set(i);
  }
  return f;
}

}  // namespace

TEST_CASE("setup draws k from the public bounds") {
  Rng rng(3);
  const auto fixed = setup(1024, {4, 4}, rng);
  CHECK(fixed.params.secret_key_count() == 4);
  CHECK(fixed.keys.size() == 4);
  for (int i = 0; i < 50; ++i) {
    const auto s = setup(1024, {4, 8}, rng);
    CHECK(s.params.secret_key_count() >= 4);
    CHECK(s.params.secret_key_count() <= 8);
    CHECK(s.keys.size() == s.params.secret_key_count());
    std::set<Bytes> distinct(s.keys.keys().begin(), s.keys.keys().end());
    CHECK(distinct.size() == s.keys.size());
  }
  CHECK_THROWS_AS(setup(0, {1, 2}, rng), ParameterError);
  CHECK_THROWS_AS(setup(64, {5, 4}, rng), ParameterError);
  CHECK_THROWS_AS(setup(64, {0, 4}, rng), ParameterError);
  CHECK_THROWS_AS(setup(64, {1, 2}, rng, "HMAC-MD5"), ParameterError);
}

TEST_CASE("setup covers every k in the bounds") {
  Rng rng(11);
  std::set<std::uint32_t> seen;
  for (int i = 0; i < 200; ++i) seen.insert(setup(64, {4, 8}, rng).params.secret_key_count());
  CHECK(seen == std::set<std::uint32_t>{4, 5, 6, 7, 8});
}

TEST_CASE("hmac matches the RFC 4231 test vector") {
  const Bytes key(20, 0x0b);
  const auto mac = hmac("HMAC-SHA256", key, bytes_of("Hi There"));
  static const char* expected = "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7";
  std::string hex;
  for (auto b : mac) {
    static const char* digits = "0123456789abcdef";
    hex += digits[b >> 4];
    hex += digits[b & 15];
  }
  CHECK(hex == expected);
  CHECK(hmac("HMAC-SHA512", key, bytes_of("x")).size() == 64);
  CHECK(hmac("HMAC-SHA224", key, bytes_of("x")).size() == 28);
}

TEST_CASE("bit_index takes the first eight MAC bytes big-endian mod m") {
  Bytes key(32);
  for (std::size_t i = 0; i < key.size(); ++i) key[i] = static_cast<std::uint8_t>(i);
  const auto element = bytes_of(encode_tuple(Username("A"), TimeInterval(2, 5)));
  // Independently computed with Python's hmac module.
  CHECK(bit_index("HMAC-SHA256", key, element, 1024) == 364);
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    rng.fill(key);
    const auto e = random_element(rng);
    const std::size_t m = 1 + rng.uniform(0, 5000);
    CHECK(bit_index("HMAC-SHA256", key, e, m) == oracle_index(key, e, m));
  }
}

TEST_CASE("create sets exactly the oracle positions") {
  const auto s = fixed_setup(64, 2);
  const std::vector<Bytes> elems{bytes_of("a"), bytes_of("b"), bytes_of("c")};
  const auto f = create(s.params, s.keys, elems);
  std::set<std::size_t> expected;
  for (const auto& e : elems) {
    const auto p = oracle_positions(s, e);
    expected.insert(p.begin(), p.end());
  }
  CHECK(f.popcount() <= 6);
  CHECK(f.popcount() == expected.size());
  for (std::size_t i = 0; i < 64; ++i) CHECK(f.test(i) == expected.contains(i));

  CHECK(create(s.params, s.keys, {}).all_zero());
  CHECK(contains(f, s.params, s.keys, elems[0]));
}

TEST_CASE("create rejects keys inconsistent with params") {
  const auto s4 = fixed_setup(128, 4);
  const auto s5 = fixed_setup(128, 5);
  CHECK_THROWS_AS(create(s4.params, s5.keys, {}), ParameterError);
}

TEST_CASE("insert is idempotent and monotone") {
  const auto s = fixed_setup(1024, 4);
  Rng rng(9);
  KeyedBloomFilter f(1024);
  std::vector<Bytes> all;
  for (int i = 0; i < 100; ++i) {
    const auto x = random_element(rng);
    all.push_back(x);
    const auto g = insert(f, s.params, s.keys, x);
    // Fresh positions counted by the oracle bound the popcount growth.
    std::size_t fresh = 0;
    for (auto p : oracle_positions(s, x)) fresh += f.test(p) ? 0 : 1;
    CHECK(g.popcount() - f.popcount() == fresh);
    CHECK(g.popcount() - f.popcount() <= 4);
    for (std::size_t w = 0; w < g.words().size(); ++w) {
      CHECK((g.words()[w] | f.words()[w]) == g.words()[w]);
    }
    CHECK(insert(g, s.params, s.keys, x) == g);
    f = g;
  }
  CHECK(f == create(s.params, s.keys, all));
  CHECK_THROWS_AS(insert(KeyedBloomFilter(512), s.params, s.keys, all[0]), StructuralError);
}

TEST_CASE("create is order independent and deterministic") {
  const auto s = fixed_setup(512, 6);
  Rng rng(21);
  std::vector<Bytes> elems;
  for (int i = 0; i < 30; ++i) elems.push_back(random_element(rng));
  const auto f = create(s.params, s.keys, elems);
  for (int trial = 0; trial < 20; ++trial) {
    rng.shuffle(elems);
    CHECK(create(s.params, s.keys, elems) == f);
  }
  const auto again = fixed_setup(512, 6);
  rng.shuffle(elems);
  CHECK(create(again.params, again.keys, elems) == f);
}

TEST_CASE("inc basics") {
  const auto s = fixed_setup(256, 4);
  const auto x = bytes_of("x");
  const auto y = bytes_of("y");
  const auto f = create(s.params, s.keys, std::vector<Bytes>{x, y});
  CHECK(inc(KeyedBloomFilter(256), f).all_ones());
  CHECK(inc(f, f).all_ones());
  const auto fx = create(s.params, s.keys, std::vector<Bytes>{x});
  const auto missing = oracle_positions(s, y);
  const bool y_hidden = std::any_of(missing.begin(), missing.end(),
                                    [&](std::size_t p) { return !fx.test(p); });
  CHECK(y_hidden);
  CHECK(inc(f, fx).all_ones() == !y_hidden);
  CHECK_THROWS_AS(inc(f, KeyedBloomFilter(255)), StructuralError);
  CHECK_THROWS_AS(is_subset(f, KeyedBloomFilter(128)), StructuralError);
}

TEST_CASE("inc keeps padding bits clear") {
  for (std::size_t m : {1, 63, 65, 100}) {
    const auto r = inc(KeyedBloomFilter(m), KeyedBloomFilter(m));
    CHECK(r.popcount() == m);
    CHECK(r.all_ones());
  }
}

TEST_CASE("inc word rule equals the index rule") {
  Rng rng(17);
  for (int i = 0; i < 500; ++i) {
    const std::size_t m = 1 + rng.uniform(0, 700);
    const auto a = random_bits(m, rng, rng.unit());
    const auto b = random_bits(m, rng, rng.unit());
    CHECK(inc(a, b) == inc_indexwise(a, b));
  }
}

TEST_CASE("is_subset examples") {
  const auto s = fixed_setup(1024, 5);
  const auto x = bytes_of("x");
  const auto f = create(s.params, s.keys, std::vector<Bytes>{x, bytes_of("y")});
  CHECK(is_subset(KeyedBloomFilter(1024), f) == SubsetVerdict::SubsetLikely);
  CHECK(is_subset(create(s.params, s.keys, std::vector<Bytes>{x}), f) ==
        SubsetVerdict::SubsetLikely);
}

TEST_CASE("no false negatives over randomized sets") {
  Rng rng(23);
  for (int trial = 0; trial < 1000; ++trial) {
    auto s = setup(1024, {4, 8}, rng);
    std::vector<Bytes> elems;
    const auto n = 1 + rng.uniform(0, 40);
    for (std::uint64_t i = 0; i < n; ++i) elems.push_back(random_element(rng));
    const auto f = create(s.params, s.keys, elems);
    const auto& x = elems[rng.uniform(0, n - 1)];
    CHECK(is_subset(create(s.params, s.keys, std::vector<Bytes>{x}), f) ==
          SubsetVerdict::SubsetLikely);
  }
}

TEST_CASE("NotSubset is never wrong") {
  Rng rng(29);
  const auto s = fixed_setup(256, 4);
  std::size_t not_subset = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<Bytes> universe;
    for (int i = 0; i < 12; ++i) universe.push_back(bytes_of("e" + std::to_string(i)));
    std::vector<Bytes> a, b;
    for (const auto& e : universe) {
      if (rng.unit() < 0.2) a.push_back(e);
      if (rng.unit() < 0.6) b.push_back(e);
    }
    const auto verdict = is_subset(create(s.params, s.keys, a), create(s.params, s.keys, b));
    const bool truly = std::all_of(a.begin(), a.end(), [&](const Bytes& e) {
      return std::find(b.begin(), b.end(), e) != b.end();
    });
    if (verdict == SubsetVerdict::NotSubset) {
      ++not_subset;
      CHECK_FALSE(truly);
    }
    if (truly) CHECK(verdict == SubsetVerdict::SubsetLikely);
  }
  CHECK(not_subset > 0);
}

TEST_CASE("fp_rate closed form") {
  // Frozen from an independent evaluation of (1 - e^(-kn/m))^k.
  CHECK(fp_rate(1024, 5, 20) == doctest::Approx(6.971626107715563e-06).epsilon(1e-12));
  CHECK(fp_rate(1024, 4, 20) == doctest::Approx(3.1896525173621145e-05).epsilon(1e-12));
  CHECK(fp_rate(1024, 4, 20) < 0.01);
  CHECK(fp_rate(1'000'000'000, 4, 1) < 1e-30);
  CHECK(fp_rate(1024, 5, 0) == 0.0);
  CHECK_THROWS_AS(fp_rate(0, 5, 1), ParameterError);
  CHECK_THROWS_AS(fp_rate(64, 0, 1), ParameterError);
}

TEST_CASE("filters built under fresh keys do not pass as members") {
  // An agency holding only public parameters can guess keys. Probing a real
  // filter with such guesses may only succeed at the false-positive rate.
  Rng rng(31);
  const auto real = setup(1024, {4, 8}, rng);
  std::vector<Bytes> set;
  for (int i = 0; i < 20; ++i) set.push_back(random_element(rng));
  const auto target = create(real.params, real.keys, set);
  const double fill = static_cast<double>(target.popcount()) / 1024.0;
  std::size_t hits = 0;
  double expected = 0;
  const int probes = 4000;
  for (int i = 0; i < probes; ++i) {
    const auto guess = setup(1024, real.params.key_bounds(), rng);
    const auto forged = create(guess.params, guess.keys, std::vector<Bytes>{set[i % 20]});
    if (is_subset(forged, target) == SubsetVerdict::SubsetLikely) ++hits;
    expected += std::pow(fill, guess.params.secret_key_count());
  }
  // expected stays below one; allow a handful of unlucky hits.
  CHECK(expected < 2.0);
  CHECK(hits <= 5);
}

TEST_CASE("serialization round trip and layout") {
  Rng rng(37);
  for (std::size_t m : {1, 7, 8, 9, 63, 64, 65, 1000, 1024}) {
    const auto f = random_bits(m, rng, 0.4);
    const auto blob = serialize(f);
    CHECK(blob.size() == kHeaderBytes + (m + 7) / 8);
    CHECK(deserialize(blob) == f);
  }
  KeyedBloomFilter f(1024);
  f.set(9);
  f.set(1023);
  const auto blob = serialize(f);
  CHECK(std::string(blob.begin(), blob.begin() + 4) == "KBF1");
  std::uint64_t m = 0;
  for (int i = 4; i < 12; ++i) m = (m << 8) | blob[i];
  CHECK(m == 1024);
  for (int i = 12; i < 16; ++i) CHECK(blob[i] == 0);
  CHECK(blob[kHeaderBytes + 1] == 0x02);
  CHECK(blob[kHeaderBytes + 127] == 0x80);
  CHECK(std::count_if(blob.begin() + kHeaderBytes, blob.end(), [](auto b) { return b != 0; }) ==
        2);
}

TEST_CASE("deserialize rejects malformed blobs") {
  const auto good = serialize(KeyedBloomFilter(12));
  CHECK_THROWS_AS(deserialize(ByteView(good.data(), 10)), ParseError);
  auto bad_magic = good;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(deserialize(bad_magic), ParseError);
  auto reserved = good;
  reserved[13] = 1;
  CHECK_THROWS_AS(deserialize(reserved), ParseError);
  auto short_payload = good;
  short_payload.pop_back();
  CHECK_THROWS_AS(deserialize(short_payload), ParseError);
  auto padding = good;
  padding.back() = 0x10;  // index 12 is beyond m
  CHECK_THROWS_AS(deserialize(padding), ParseError);
  auto zero = good;
  for (int i = 4; i < 12; ++i) zero[i] = 0;
  zero.resize(kHeaderBytes);
  CHECK_THROWS_AS(deserialize(zero), ParseError);
}

TEST_CASE("filter files round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "chaintrace_kbloom_test";
  std::filesystem::create_directories(dir);
  Rng rng(41);
  const auto f = random_bits(300, rng, 0.5);
  write_filter(dir / "f.kbf", f);
  CHECK(read_filter(dir / "f.kbf") == f);
  CHECK_THROWS_AS(read_filter(dir / "missing.kbf"), IoError);
  std::filesystem::remove_all(dir);
}
