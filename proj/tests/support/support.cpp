#include "support.hpp"

#include <algorithm>
#include <functional>

namespace chaintrace::testing {

std::filesystem::path fixture_dir() { return CHAINTRACE_FIXTURE_DIR; }

std::vector<BaseStationLog> toy_logs() { return load_logs(fixture_dir() / "toy_logs.csv"); }

std::unique_ptr<telco::Telco> make_telco(const std::vector<BaseStationLog>& logs,
                                         std::uint64_t seed, std::size_t m,
                                         kbloom::KeyBounds bounds,
                                         std::optional<std::vector<std::size_t>> shuffle) {
  Rng rng(seed);
  auto state = telco::make_state(logs, telco::synthetic_escrow(logs), m, bounds, rng);
  if (shuffle) state.station_shuffle = *shuffle;
  return std::make_unique<telco::Telco>(std::move(state), "test");
}

std::unique_ptr<telco::Telco> toy_telco(std::uint64_t seed) {
  return make_telco(toy_logs(), seed, 1024, {4, 8}, std::vector<std::size_t>{0, 1, 2});
}

namespace {

struct Placed {
  std::size_t position;  // catalog position of the record's station
  TimeInterval interval;
};

// Time predicate on a complete candidate chain, independent of any tree.
// Forward searches walk the edges from a, reverse ones from b, each side
// holding the interval of the user being expanded.
bool admissible(const ProximityChain& chain, const PlainQuery& q) {
  for (const auto& c : chain.contacts) {
    if (!(c.from.start() <= c.to.end() && c.to.start() <= c.from.end())) return false;
  }
  const auto start = [](const ContactEvidence& c) { return std::max(c.from.start(), c.to.start()); };
  const std::size_t n = chain.contacts.size();
  if (q.direction == agency::Direction::Forward) {
    Time bound = q.t0;
    for (const auto& c : chain.contacts) {
      if (q.rule == agency::TimeRule::Ordered) {
        if (start(c) < bound) return false;
      } else if (!(c.from.start() > bound && c.from.end() > bound)) {
        return false;
      }
      bound = start(c);
    }
    return true;
  }
  Time bound = q.horizon;
  for (std::size_t i = n; i-- > 0;) {
    const auto& c = chain.contacts[i];
    if (q.rule == agency::TimeRule::Ordered) {
      if (start(c) > bound) return false;
      bound = start(c);
    } else {
      if (!(c.to.start() < bound && c.to.end() < bound)) return false;
      bound = std::min(c.from.end(), c.to.end());
    }
  }
  return true;
}

}  // namespace

PlainQuery plain_query(const agency::SearchConfig& cfg, agency::Direction direction) {
  return PlainQuery{cfg.endpoint_a, cfg.endpoint_b, cfg.t0, cfg.horizon, cfg.rule, direction,
                    cfg.max_depth};
}

std::vector<ProximityChain> plaintext_chains(const std::vector<BaseStationLog>& logs,
                                             const std::vector<std::size_t>& shuffle,
                                             const PlainQuery& query) {
  const Username& a = query.a;
  const Username& b = query.b;
  std::vector<std::size_t> position(shuffle.size());
  for (std::size_t p = 0; p < shuffle.size(); ++p) position[shuffle[p]] = p;

  std::map<Username, std::vector<Placed>> by_user;
  for (std::size_t s = 0; s < logs.size(); ++s) {
    for (const auto& r : logs[s].records) by_user[r.user].push_back({position[s], r.interval});
  }
  std::vector<Username> middle;
  for (const auto& [u, recs] : by_user) {
    if (u != a && u != b) middle.push_back(u);
  }

  // All co-located overlapping record pairs per ordered user pair. Extending
  // a sequence through a pair with none cannot yield a chain.
  std::map<std::pair<Username, Username>, std::vector<ContactEvidence>> pairs;
  for (const auto& [x, xs] : by_user) {
    for (const auto& [y, ys] : by_user) {
      if (x == y) continue;
      auto& list = pairs[{x, y}];
      for (const auto& p : xs) {
        for (const auto& q : ys) {
          if (p.position == q.position && intervals_overlap(p.interval, q.interval)) {
            list.push_back(ContactEvidence{p.position, p.interval, q.interval});
          }
        }
      }
    }
  }
  const auto met = [&](const Username& x, const Username& y) { return !pairs[{x, y}].empty(); };

  std::vector<ProximityChain> out;
  // Every ordered selection of distinct intermediate users.
  std::vector<Username> sequence{a};
  std::vector<bool> used(middle.size(), false);
  std::function<void()> choose_users = [&]() {
    std::vector<Username> users = sequence;
    users.push_back(b);
    const std::size_t edges = users.size() - 1;
    if (!query.max_depth || edges <= *query.max_depth) {
      // Every combination of record pairs, one pair per edge.
      ProximityChain chain{users, {}};
      std::function<void(std::size_t)> choose_pairs = [&](std::size_t e) {
        if (e == edges) {
          if (admissible(chain, query)) out.push_back(chain);
          return;
        }
        for (const auto& contact : pairs[{users[e], users[e + 1]}]) {
          chain.contacts.push_back(contact);
          choose_pairs(e + 1);
          chain.contacts.pop_back();
        }
      };
      choose_pairs(0);
    }
    for (std::size_t i = 0; i < middle.size(); ++i) {
      if (used[i] || !met(sequence.back(), middle[i])) continue;
      used[i] = true;
      sequence.push_back(middle[i]);
      choose_users();
      sequence.pop_back();
      used[i] = false;
    }
  };
  choose_users();
  return out;
}

std::vector<ProximityChain> sorted(std::vector<ProximityChain> chains) {
  std::sort(chains.begin(), chains.end());
  return chains;
}

std::vector<std::string> user_strings(const std::vector<ProximityChain>& chains) {
  std::vector<std::string> out;
  for (const auto& c : chains) out.push_back(join_users(c.users));
  return out;
}

std::vector<BaseStationLog> random_logs(std::uint64_t seed, std::size_t max_users,
                                        std::size_t max_stations) {
  Rng rng(seed ^ 0x9E3779B97F4A7C15ULL);
  LogShape shape;
  shape.users = static_cast<std::size_t>(rng.uniform(3, max_users));
  shape.stations = static_cast<std::size_t>(rng.uniform(1, max_stations));
  shape.horizon = 24;
  shape.records = static_cast<std::size_t>(rng.uniform(shape.users, 2 * shape.users + 2));
  auto logs = generate_logs(shape, rng);
  return logs;
}

bool really_at(const std::vector<BaseStationLog>& logs, const std::vector<std::size_t>& shuffle,
               const TupleLabel& label, std::size_t filter_index) {
  for (const auto& r : logs.at(shuffle.at(filter_index)).records) {
    if (r.user == label.user && r.interval == label.interval) return true;
  }
  return false;
}

}  // namespace chaintrace::testing
