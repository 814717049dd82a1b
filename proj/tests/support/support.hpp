#pragma once

// Shared test helpers: fixture loading, telco construction, and a plaintext
// chain enumerator that reads raw logs directly and never touches a filter.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "chaintrace/agency/search.hpp"
#include "chaintrace/logmodel/logs.hpp"
#include "chaintrace/telco.hpp"

namespace chaintrace::testing {

std::filesystem::path fixture_dir();

std::vector<BaseStationLog> toy_logs();

/// Telco over `logs` with filter setup from `seed`. The station shuffle is
/// replaced by `shuffle` when given.
std::unique_ptr<telco::Telco> make_telco(const std::vector<BaseStationLog>& logs,
                                         std::uint64_t seed, std::size_t m = 1024,
                                         kbloom::KeyBounds bounds = {4, 8},
                                         std::optional<std::vector<std::size_t>> shuffle = {});

/// The toy telco with catalog order equal to log order.
std::unique_ptr<telco::Telco> toy_telco(std::uint64_t seed = 7);

/// All chains from `a` to `b` over plaintext logs, by enumerating every
/// sequence of distinct users and every choice of co-located record pair per
/// edge, then applying the time rule of a search in `direction` starting at
/// t0 (forward) or horizon (reverse). Contacts use catalog positions given
/// by `shuffle`.
struct PlainQuery {
  Username a;
  Username b;
  Time t0 = 0;
  Time horizon = 24;
  agency::TimeRule rule = agency::TimeRule::Ordered;
  agency::Direction direction = agency::Direction::Forward;
  std::optional<std::size_t> max_depth;
};

std::vector<ProximityChain> plaintext_chains(const std::vector<BaseStationLog>& logs,
                                             const std::vector<std::size_t>& shuffle,
                                             const PlainQuery& query);

/// Query matching a search config.
PlainQuery plain_query(const agency::SearchConfig& cfg,
                       agency::Direction direction = agency::Direction::Forward);

/// Sorted copy, for multiset comparison.
std::vector<ProximityChain> sorted(std::vector<ProximityChain> chains);

std::vector<std::string> user_strings(const std::vector<ProximityChain>& chains);

/// Random fixture at horizon 24 with 3..max_users users, 1..max_stations
/// stations and between users and 2 * users + 2 records.
std::vector<BaseStationLog> random_logs(std::uint64_t seed, std::size_t max_users = 10,
                                        std::size_t max_stations = 4);

/// True when `label` is really recorded at the station published at
/// catalog position `filter_index`.
bool really_at(const std::vector<BaseStationLog>& logs, const std::vector<std::size_t>& shuffle,
               const TupleLabel& label, std::size_t filter_index);

}  // namespace chaintrace::testing
