#pragma once

// Bidirectional search split across two computing parties. Party 1 grows the
// forward tree, party 2 the reverse tree. A coordinator sees one frontier
// username per party and round and tells both parties when the usernames
// meet; the parties then exchange the partial chains with their evidence
// directly, and the coordinator only learns the username sequences.

#include <cstddef>
#include <optional>
#include <variant>
#include <vector>

#include "chaintrace/agency/search.hpp"

namespace chaintrace::agency {

enum class Party { Forward = 1, Reverse = 2 };

struct FrontierMessage {
  Party party = Party::Forward;
  std::size_t round = 0;
  /// Empty once the party's tree is exhausted.
  std::optional<Username> username;
};

struct MatchNotice {
  std::size_t forward_round = 0;
  std::size_t reverse_round = 0;
};

struct PartialChainMessage {
  Party party = Party::Forward;
  std::size_t round = 0;
  std::vector<Username> users;
};

using TranscriptEntry = std::variant<FrontierMessage, MatchNotice, PartialChainMessage>;

class Coordinator {
 public:
  Coordinator(Username endpoint_a, Username endpoint_b);

  /// Throws ProtocolError when the message is not for the open round or the
  /// party already reported this round.
  void receive(const FrontierMessage& message);

  /// Closes the open round and returns its matches. Throws ProtocolError
  /// unless both parties reported.
  std::vector<MatchNotice> close_round();

  void receive(const PartialChainMessage& message);

  std::size_t open_round() const noexcept { return round_; }
  const std::vector<TranscriptEntry>& transcript() const noexcept { return transcript_; }

 private:
  Username a_;
  Username b_;
  std::size_t round_ = 1;
  std::optional<FrontierMessage> pending_[2];
  std::vector<std::pair<std::size_t, Username>> seen_[2];
  std::vector<TranscriptEntry> transcript_;
};

/// Partial chain handed from one party to the other after a match.
struct PeerPartial {
  std::size_t round = 0;
  ProximityChain chain;
};

class SearchWorker {
 public:
  SearchWorker(Party party, const TelcoBoundary& oracle, const FilterCatalog& catalog,
               const SearchConfig& cfg);

  Party party() const noexcept { return party_; }
  std::size_t round() const noexcept { return round_; }

  /// Expands one node (if any remain) and reports it.
  FrontierMessage advance();

  /// The chain completed by this party's latest node, if it reached the
  /// other endpoint.
  std::optional<ProximityChain> completed() const;

  /// Partial chain of the node created in `round`, in A-to-B orientation.
  PeerPartial partial(std::size_t round) const;
  PartialChainMessage partial_message(std::size_t round) const;

  const ProximityTree& tree() const noexcept { return expander_.tree(); }

 private:
  std::size_t node_of(std::size_t round) const;

  Party party_;
  TreeExpander expander_;
  std::size_t round_ = 0;
  std::optional<std::size_t> latest_;
};

enum class Scheduling {
  Interleaved,  // one thread, parties alternate per round
  Threaded,     // one thread per party, lockstep at a barrier
};

struct DecentralizedResult {
  BidirectionalResult result;
  std::vector<TranscriptEntry> transcript;
};

/// Same output as bidirectional_search.
DecentralizedResult decentralized_bidirectional(SearchWorker& party1, SearchWorker& party2,
                                                Coordinator& coordinator,
                                                const SearchConfig& cfg,
                                                Scheduling scheduling = Scheduling::Interleaved);

/// Builds both workers and the coordinator, then runs the protocol.
DecentralizedResult decentralized_bidirectional(const TelcoBoundary& oracle,
                                                const FilterCatalog& catalog,
                                                const SearchConfig& cfg,
                                                Scheduling scheduling = Scheduling::Interleaved);

}  // namespace chaintrace::agency
