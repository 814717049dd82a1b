#pragma once

// The telco party: the only holder of raw logs, filter keys and the identity
// escrow.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "chaintrace/boundary.hpp"
#include "chaintrace/kbloom.hpp"
#include "chaintrace/logmodel/logs.hpp"
#include "chaintrace/rng.hpp"

namespace chaintrace::telco {

/// username -> real identity
std::map<Username, std::string> parse_escrow(std::istream& in);
std::map<Username, std::string> load_escrow(const std::filesystem::path& path);
void write_escrow(std::ostream& out, const std::map<Username, std::string>& escrow);
void save_escrow(const std::map<Username, std::string>& escrow, const std::filesystem::path& path);

/// Placeholder identities "Person <username>" for every user in `logs`.
std::map<Username, std::string> synthetic_escrow(const std::vector<BaseStationLog>& logs);

struct AuditEntry {
  std::size_t seq = 0;
  std::string chain;
  std::string decision;
};

/// Append-only disclosure log, CSV `seq,chain,decision`. When bound to a file
/// the sequence continues from the rows already there.
class AuditLog {
 public:
  explicit AuditLog(std::optional<std::filesystem::path> path = std::nullopt);

  AuditEntry append(const std::string& chain, const std::string& decision);
  std::vector<AuditEntry> entries() const;

 private:
  mutable std::mutex mutex_;
  std::optional<std::filesystem::path> path_;
  std::vector<AuditEntry> entries_;
  std::size_t next_seq_ = 1;
};

struct TelcoState {
  kbloom::FilterParams params;
  kbloom::SecretKeySet keys;
  std::vector<BaseStationLog> logs;
  std::map<Username, std::string> escrow;
  /// Catalog position i publishes the filter of logs[station_shuffle[i]].
  std::vector<std::size_t> station_shuffle;
};

/// Runs filter setup and draws the station shuffle from `rng`, in that order.
/// Throws IntegrityError when the escrow misses a username of the logs.
TelcoState make_state(std::vector<BaseStationLog> logs, std::map<Username, std::string> escrow,
                      std::size_t m, kbloom::KeyBounds bounds, Rng& rng,
                      std::string_view hash_name = kbloom::kDefaultHash);

/// Throws IntegrityError or ParameterError when an invariant is broken.
void check_state(const TelcoState& state);

FilterCatalog build_catalog(const TelcoState& state, std::string catalog_id = "catalog");

kbloom::KeyedBloomFilter request_tuple_filter(const TelcoState& state, const Username& user,
                                              const TimeInterval& interval);

/// In-process telco answering the agency through the boundary interface.
class Telco final : public TelcoBoundary {
 public:
  Telco(TelcoState state, std::string catalog_id = "catalog",
        std::optional<std::filesystem::path> audit_path = std::nullopt);

  kbloom::PublicFilterParams public_params() const override;
  FilterCatalog catalog() const override { return catalog_; }
  kbloom::KeyedBloomFilter request_tuple_filter(const Username& user,
                                                const TimeInterval& interval) const override;
  std::vector<LabeledFilter> request_own_tuples(const Username& user,
                                                const TimeInterval& window) const override;
  std::vector<CandidateFilter> request_candidate_filters(
      std::span<const CandidateQuery> queries) const override;
  IdentityMap reveal_identities(const InfectionChain& chain, std::string_view note) override;

  // Telco-side accessors, never reachable through TelcoBoundary.
  const TelcoState& state() const noexcept { return state_; }
  const AuditLog& audit() const noexcept { return audit_; }

 private:
  TelcoState state_;
  FilterCatalog catalog_;
  std::map<TupleLabel, kbloom::KeyedBloomFilter> singletons_;
  AuditLog audit_;
};

}  // namespace chaintrace::telco
