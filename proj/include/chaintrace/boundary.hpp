#pragma once

// What crosses between the telco and the agency. Filters, usernames and
// intervals only: no station tokens, no keys, no key count, no raw records.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chaintrace/kbloom.hpp"
#include "chaintrace/logmodel/types.hpp"

namespace chaintrace {

/// The per-station filters in published (shuffled) order.
struct FilterCatalog {
  std::vector<kbloom::KeyedBloomFilter> station_filters;
  std::string catalog_id;
};

struct TupleLabel {
  Username user;
  TimeInterval interval;

  friend bool operator==(const TupleLabel&, const TupleLabel&) = default;
  friend auto operator<=>(const TupleLabel&, const TupleLabel&) = default;
};

/// Singleton filter of one (username, interval) tuple.
struct LabeledFilter {
  TupleLabel label;
  kbloom::KeyedBloomFilter filter;
};

/// "Who else was connected during `window`?", excluding `about` itself.
struct CandidateQuery {
  Username about;
  TimeInterval window;
};

struct CandidateFilter {
  std::size_t query_index = 0;
  LabeledFilter labeled;
};

/// username -> real identity
using IdentityMap = std::map<Username, std::string>;

class TelcoBoundary {
 public:
  virtual ~TelcoBoundary() = default;

  virtual kbloom::PublicFilterParams public_params() const = 0;
  virtual FilterCatalog catalog() const = 0;

  virtual kbloom::KeyedBloomFilter request_tuple_filter(const Username& user,
                                                        const TimeInterval& interval) const = 0;

  /// Singleton filters of `user`'s own tuples whose interval meets `window`,
  /// deduplicated across stations and sorted by interval.
  virtual std::vector<LabeledFilter> request_own_tuples(const Username& user,
                                                        const TimeInterval& window) const = 0;

  /// For each query, singleton filters of every other user's tuple whose
  /// interval meets the window, sorted by label. Station membership is for
  /// the caller to find out against the catalog.
  virtual std::vector<CandidateFilter> request_candidate_filters(
      std::span<const CandidateQuery> queries) const = 0;

  /// Throws PolicyRefusal unless `chain` is a valid infection chain.
  virtual IdentityMap reveal_identities(const InfectionChain& chain, std::string_view note) = 0;
};

}  // namespace chaintrace
