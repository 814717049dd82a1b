#pragma once

// Value types shared by every party. Nothing here identifies a base station
// or a real person: usernames are opaque credentials and contacts refer to
// filters by their position in the published catalog.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chaintrace {

using Time = std::int64_t;

inline constexpr Time kTimeMin = std::numeric_limits<Time>::min();
inline constexpr Time kTimeMax = std::numeric_limits<Time>::max();

/// Separator byte of the canonical tuple encoding.
inline constexpr char kTupleSeparator = '\x1F';

/// Opaque per-user credential. Never a real identity.
class Username {
 public:
  /// Throws EncodingError for empty tokens or tokens containing whitespace,
  /// control bytes (including the tuple separator) or any of , ; | " \ .
  explicit Username(std::string token);

  const std::string& str() const noexcept { return token_; }

  friend bool operator==(const Username&, const Username&) = default;
  friend auto operator<=>(const Username&, const Username&) = default;

 private:
  std::string token_;
};

/// Closed integer interval [start, end].
class TimeInterval {
 public:
  TimeInterval(Time start, Time end);

  /// [t, +inf), used for "anything at or after t" queries.
  static TimeInterval from(Time t) { return TimeInterval(t, kTimeMax); }
  /// (-inf, t].
  static TimeInterval until(Time t) { return TimeInterval(kTimeMin, t); }

  Time start() const noexcept { return start_; }
  Time end() const noexcept { return end_; }
  Time length() const noexcept { return end_ - start_; }

  friend bool operator==(const TimeInterval&, const TimeInterval&) = default;
  friend auto operator<=>(const TimeInterval&, const TimeInterval&) = default;

 private:
  Time start_;
  Time end_;
};

/// Closed-interval intersection test; touching endpoints count.
bool intervals_overlap(const TimeInterval& a, const TimeInterval& b) noexcept;

/// [max(starts), min(ends)]. Throws PreconditionError when disjoint.
TimeInterval overlap_interval(const TimeInterval& a, const TimeInterval& b);

/// token 0x1F start 0x1F end, times in decimal ASCII.
std::string encode_tuple(const Username& user, const TimeInterval& interval);

/// One edge of a chain: the catalog filter both users were found in, and the
/// connection interval of each side, oriented along the chain.
struct ContactEvidence {
  std::size_t filter_index = 0;
  TimeInterval from{0, 0};
  TimeInterval to{0, 0};

  TimeInterval overlap() const { return overlap_interval(from, to); }

  friend bool operator==(const ContactEvidence&, const ContactEvidence&) = default;
  friend auto operator<=>(const ContactEvidence&, const ContactEvidence&) = default;
};

/// Users in infection order (first and last are the known-infected endpoints)
/// with contacts[i] linking users[i] to users[i + 1].
struct ProximityChain {
  std::vector<Username> users;
  std::vector<ContactEvidence> contacts;

  friend bool operator==(const ProximityChain&, const ProximityChain&) = default;
  friend auto operator<=>(const ProximityChain&, const ProximityChain&) = default;
};

/// A proximity chain whose per-edge infection probabilities cleared the
/// threshold. Chains without intermediate users link two confirmed cases
/// directly and are infection chains whatever their edge probability.
struct InfectionChain {
  ProximityChain chain;
  std::vector<double> edge_probabilities;
  double overall = 0.0;
  double threshold = 0.0;

  friend bool operator==(const InfectionChain&, const InfectionChain&) = default;
};

/// nullopt when `infection` satisfies the threshold rule and its overall
/// probability is the product of its edge probabilities.
std::optional<std::string> infection_violation(const InfectionChain& infection);

/// Describes the first broken chain invariant, or nullopt for a valid chain:
/// at least two users, one contact per edge, no repeated user, overlapping
/// contact intervals, and overlap starts non-decreasing along the chain.
std::optional<std::string> chain_violation(const ProximityChain& chain);

/// Throws PreconditionError carrying chain_violation's message.
void validate_chain(const ProximityChain& chain);

/// "A;C;G;B"
std::string join_users(std::span<const Username> users, std::string_view separator = ";");

std::vector<Username> split_users(std::string_view joined, char separator = ';');

}  // namespace chaintrace
