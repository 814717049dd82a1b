#include "chaintrace/logmodel/logs.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <tuple>

#include "chaintrace/csv.hpp"
#include "chaintrace/errors.hpp"

namespace chaintrace {
namespace {

constexpr std::string_view kHeader = "station,user,t_start,t_end";

void check_station_token(const std::string& token, std::size_t line) {
  if (token.empty()) throw ParseError("empty station token", line);
  for (unsigned char c : token) {
    if (c < 0x20 || c == '"' || c == ',') throw ParseError("station token has reserved byte", line);
  }
}

}  // namespace

std::vector<BaseStationLog> parse_logs(std::istream& in) {
  csv::expect_header(in, kHeader);
  std::vector<BaseStationLog> logs;
  std::map<std::string, std::size_t> index;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
    const auto fields = csv::split(line);
    if (fields.size() != 4) throw ParseError("expected 4 fields", line_no);
    check_station_token(fields[0], line_no);
    auto [it, fresh] = index.try_emplace(fields[0], logs.size());
    if (fresh) logs.push_back(BaseStationLog{fields[0], {}});
    if (fields[1].empty() && fields[2].empty() && fields[3].empty()) continue;

    const Time t1 = csv::parse_count(fields[2], line_no, "t_start");
    const Time t2 = csv::parse_count(fields[3], line_no, "t_end");
    if (t1 > t2) {
      throw ParseError("t_start " + std::to_string(t1) + " after t_end " + std::to_string(t2),
                       line_no);
    }
    try {
      logs[it->second].records.push_back(
          ConnectionRecord{Username(fields[1]), TimeInterval(t1, t2)});
    } catch (const EncodingError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return logs;
}

std::vector<BaseStationLog> load_logs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_logs(in);
}

void write_logs(std::ostream& out, const std::vector<BaseStationLog>& logs) {
  out << kHeader << '\n';
  for (const auto& log : logs) {
    if (log.records.empty()) out << log.station_token << ",,,\n";
    for (const auto& r : log.records) {
      out << log.station_token << ',' << r.user.str() << ',' << r.interval.start() << ','
          << r.interval.end() << '\n';
    }
  }
}

void save_logs(const std::vector<BaseStationLog>& logs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_logs(out, logs);
  if (!out) throw IoError("failed writing " + path.string());
}

std::size_t record_count(const std::vector<BaseStationLog>& logs) {
  std::size_t n = 0;
  for (const auto& log : logs) n += log.records.size();
  return n;
}

std::vector<Username> usernames(const std::vector<BaseStationLog>& logs) {
  std::set<Username> all;
  for (const auto& log : logs) {
    for (const auto& r : log.records) all.insert(r.user);
  }
  return {all.begin(), all.end()};
}

Username generated_username(std::size_t index) {
  if (index < 26) return Username(std::string(1, static_cast<char>('A' + index)));
  return Username("U" + std::to_string(index + 1));
}

std::vector<BaseStationLog> generate_logs(const LogShape& shape, Rng& rng) {
  if (shape.horizon < 0) throw ParameterError("horizon must be non-negative");
  if (shape.records > 0 && (shape.users == 0 || shape.stations == 0)) {
    throw ParameterError("records requested but no users or stations");
  }
  const Time max_length = std::max<Time>(1, shape.horizon / 4);
  std::size_t intervals = 0;
  for (Time start = 0; start <= shape.horizon; ++start) {
    intervals += static_cast<std::size_t>(std::min(shape.horizon, start + max_length) - start + 1);
  }
  if (shape.records > shape.users * shape.stations * intervals) {
    throw ParameterError("more records requested than distinct records exist");
  }

  if (shape.records == 0) return {};

  using Key = std::tuple<std::size_t, std::size_t, Time, Time>;  // station, user, t1, t2
  std::set<Key> drawn;
  std::vector<Key> order;
  while (order.size() < shape.records) {
    const auto station = static_cast<std::size_t>(rng.uniform(0, shape.stations - 1));
    const auto user = static_cast<std::size_t>(rng.uniform(0, shape.users - 1));
    const Time start = rng.uniform_signed(0, shape.horizon);
    const Time end = std::min(shape.horizon, start + rng.uniform_signed(0, max_length));
    Key key{station, user, start, end};
    if (drawn.insert(key).second) order.push_back(key);
  }

  std::vector<BaseStationLog> logs;
  for (std::size_t s = 0; s < shape.stations; ++s) {
    logs.push_back(BaseStationLog{"bs" + std::to_string(s + 1), {}});
  }
  std::sort(order.begin(), order.end(), [](const Key& a, const Key& b) {
    return std::tie(std::get<0>(a), std::get<2>(a), std::get<3>(a), std::get<1>(a)) <
           std::tie(std::get<0>(b), std::get<2>(b), std::get<3>(b), std::get<1>(b));
  });
  for (const auto& [station, user, start, end] : order) {
    logs[station].records.push_back(
        ConnectionRecord{generated_username(user), TimeInterval(start, end)});
  }
  return logs;
}

}  // namespace chaintrace
