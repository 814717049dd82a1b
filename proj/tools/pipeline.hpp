#pragma once

// Glue between the parties for the command-line front end: run manifests,
// one full trace (telco setup, catalog, search, evaluation) and its output
// files.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "chaintrace/agency/report.hpp"
#include "chaintrace/agency/search.hpp"
#include "chaintrace/epi.hpp"
#include "chaintrace/telco.hpp"

namespace chaintrace::cli {

enum class Mode { Forward, Reverse, Bidirectional, Decentralized };

/// Every input of a trace. Written next to the outputs as manifest.txt in
/// the same key=value format that --config reads.
struct RunManifest {
  std::filesystem::path fixture;
  std::optional<std::filesystem::path> escrow;
  std::uint64_t seed = 1;
  std::size_t m = kbloom::kDefaultBits;
  std::uint32_t k_min = 4;
  std::uint32_t k_max = 8;
  std::string hash{kbloom::kDefaultHash};
  std::string from;
  std::string to;
  Time t0 = 0;
  std::optional<Time> horizon;
  Mode mode = Mode::Forward;
  bool deterministic = false;
  agency::TimeRule rule = agency::TimeRule::Ordered;
  agency::StopRule stop = agency::StopRule::FirstCommonChain;
  bool prune = false;
  std::optional<std::size_t> max_depth;
  epi::InfectionModelParams model;
  double lambda = 0.1;
  std::filesystem::path out = "out";
};

using KeyValues = std::map<std::string, std::string>;

/// `key=value` lines; '#' starts a comment line. Throws ParseError.
KeyValues read_key_values(const std::filesystem::path& path);

/// Applies known keys; throws ParseError naming the first unknown key or
/// malformed value.
void apply(RunManifest& manifest, const KeyValues& values);

std::string to_text(const RunManifest& manifest);

const char* to_string(Mode mode) noexcept;

struct EvaluatedChain {
  ProximityChain chain;
  std::size_t round = 0;
  /// "infection", "proximity-only" or "unordered" (violates contact order).
  std::string verdict;
  std::vector<double> edge_probabilities;
  double overall = 0.0;
};

struct TraceOutcome {
  std::vector<EvaluatedChain> chains;
  bool no_contact_data = false;
};

/// The telco party of a run, built from the manifest's fixture and seed.
std::unique_ptr<telco::Telco> make_telco(const RunManifest& manifest,
                                         std::optional<std::filesystem::path> audit_path = {});

/// Time horizon defaulting to max(24, latest record end).
Time effective_horizon(const RunManifest& manifest, const std::vector<BaseStationLog>& logs);

/// Runs the search selected by the manifest, evaluates the chains and, when
/// `write` is set, writes chains.csv, evaluation.csv, tree.dot, rounds.csv
/// and manifest.txt under manifest.out.
TraceOutcome run_trace(const RunManifest& manifest, const telco::Telco& oracle, bool write);

/// Confirmed infection chains back from an evaluation.csv.
std::vector<InfectionChain> read_confirmed(const std::filesystem::path& evaluation, double tr);

/// Every row of an evaluation.csv as an InfectionChain candidate, verdicts
/// ignored (the telco checks them itself).
std::vector<std::pair<std::string, InfectionChain>> read_evaluation(
    const std::filesystem::path& evaluation, double tr);

}  // namespace chaintrace::cli
