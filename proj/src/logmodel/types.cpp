#include "chaintrace/logmodel/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "chaintrace/errors.hpp"

namespace chaintrace {
namespace {

bool reserved_byte(unsigned char c) {
  if (c < 0x20 || c == 0x7F || c == ' ') return true;
  switch (c) {
    case ',':
    case ';':
    case '|':
    case '"':
    case '\\':
      return true;
    default:
      return false;
  }
}

}  // namespace

Username::Username(std::string token) : token_(std::move(token)) {
  if (token_.empty()) throw EncodingError("username must be nonempty");
  for (unsigned char c : token_) {
    if (reserved_byte(c)) {
      throw EncodingError("username contains reserved byte 0x" +
                          std::string(1, "0123456789ABCDEF"[c >> 4]) +
                          std::string(1, "0123456789ABCDEF"[c & 0xF]));
    }
  }
}

TimeInterval::TimeInterval(Time start, Time end) : start_(start), end_(end) {
  if (start_ > end_) {
    throw ParameterError("interval start " + std::to_string(start_) + " after end " +
                         std::to_string(end_));
  }
}

bool intervals_overlap(const TimeInterval& a, const TimeInterval& b) noexcept {
  return a.start() <= b.end() && b.start() <= a.end();
}

TimeInterval overlap_interval(const TimeInterval& a, const TimeInterval& b) {
  if (!intervals_overlap(a, b)) throw PreconditionError("intervals do not overlap");
  return TimeInterval(std::max(a.start(), b.start()), std::min(a.end(), b.end()));
}

std::string encode_tuple(const Username& user, const TimeInterval& interval) {
  std::string out = user.str();
  out += kTupleSeparator;
  out += std::to_string(interval.start());
  out += kTupleSeparator;
  out += std::to_string(interval.end());
  return out;
}

std::optional<std::string> chain_violation(const ProximityChain& chain) {
  if (chain.users.size() < 2) return "chain needs at least two users";
  if (chain.contacts.size() + 1 != chain.users.size()) return "one contact per edge expected";
  std::set<Username> seen;
  for (const auto& u : chain.users) {
    if (!seen.insert(u).second) return "user " + u.str() + " appears twice";
  }
  std::optional<Time> previous_start;
  for (std::size_t i = 0; i < chain.contacts.size(); ++i) {
    const auto& c = chain.contacts[i];
    if (!intervals_overlap(c.from, c.to)) return "contact " + std::to_string(i) + " has no overlap";
    const Time start = c.overlap().start();
    if (previous_start && start < *previous_start) {
      return "contact " + std::to_string(i) + " starts before its predecessor";
    }
    previous_start = start;
  }
  return std::nullopt;
}

std::optional<std::string> infection_violation(const InfectionChain& infection) {
  if (auto why = chain_violation(infection.chain)) return why;
  const auto& p = infection.edge_probabilities;
  if (p.size() != infection.chain.contacts.size()) return "one probability per edge expected";
  double product = 1.0;
  for (double value : p) {
    if (!(value >= 0.0 && value <= 1.0)) return "edge probability outside [0, 1]";
    product *= value;
  }
  if (std::abs(product - infection.overall) > 1e-12 * std::max(1.0, std::abs(product))) {
    return "overall probability is not the product of edge probabilities";
  }
  if (infection.chain.users.size() == 2) return std::nullopt;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] > infection.threshold)) {
      return "edge " + std::to_string(i) + " probability does not exceed the threshold";
    }
  }
  return std::nullopt;
}

void validate_chain(const ProximityChain& chain) {
  if (auto why = chain_violation(chain)) throw PreconditionError("invalid proximity chain: " + *why);
}

std::string join_users(std::span<const Username> users, std::string_view separator) {
  std::string out;
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (i != 0) out += separator;
    out += users[i].str();
  }
  return out;
}

std::vector<Username> split_users(std::string_view joined, char separator) {
  std::vector<Username> out;
  std::size_t begin = 0;
  while (begin <= joined.size()) {
    const std::size_t end = std::min(joined.find(separator, begin), joined.size());
    out.emplace_back(std::string(joined.substr(begin, end - begin)));
    begin = end + 1;
  }
  return out;
}

}  // namespace chaintrace
