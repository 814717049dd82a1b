#pragma once

// Raw connection logs. These types exist only on the telco side of the
// protocol; agency code never includes this header.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "chaintrace/logmodel/types.hpp"
#include "chaintrace/rng.hpp"

namespace chaintrace {

struct ConnectionRecord {
  Username user;
  TimeInterval interval;

  friend bool operator==(const ConnectionRecord&, const ConnectionRecord&) = default;
};

struct BaseStationLog {
  std::string station_token;
  std::vector<ConnectionRecord> records;

  friend bool operator==(const BaseStationLog&, const BaseStationLog&) = default;
};

/// CSV with header `station,user,t_start,t_end`. A row `station,,,` declares a
/// station without records so that empty logs survive a round trip.
/// Stations keep first-appearance order; records keep file order.
std::vector<BaseStationLog> parse_logs(std::istream& in);
std::vector<BaseStationLog> load_logs(const std::filesystem::path& path);

void write_logs(std::ostream& out, const std::vector<BaseStationLog>& logs);
void save_logs(const std::vector<BaseStationLog>& logs, const std::filesystem::path& path);

std::size_t record_count(const std::vector<BaseStationLog>& logs);

/// Sorted, deduplicated usernames occurring in the logs.
std::vector<Username> usernames(const std::vector<BaseStationLog>& logs);

struct LogShape {
  std::size_t users = 7;
  std::size_t stations = 3;
  Time horizon = 24;
  /// Total number of connection records across all stations.
  std::size_t records = 11;
};

/// "A".."Z" for the first 26 users, then "U27", "U28", ...
Username generated_username(std::size_t index);

/// Random logs reproducible from the rng state. All intervals fall inside
/// [0, horizon]; no station holds the same (user, interval) twice. Zero
/// records yield an empty log list.
std::vector<BaseStationLog> generate_logs(const LogShape& shape, Rng& rng);

}  // namespace chaintrace
