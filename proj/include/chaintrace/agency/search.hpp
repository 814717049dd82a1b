#pragma once

// Proximity-tree search on the agency side. Everything here runs on catalog
// filters, singleton filters labeled with (username, interval), and
// usernames handed out by the telco boundary.

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "chaintrace/boundary.hpp"
#include "chaintrace/epi.hpp"
#include "chaintrace/kbloom.hpp"
#include "chaintrace/logmodel/types.hpp"

namespace chaintrace::agency {

enum class Direction { Forward, Reverse };

/// How contact times constrain expansion.
///
/// Ordered: the bound carried down the tree is the start of the last contact
/// overlap. Forward children need an overlap starting at or after it, reverse
/// children one starting at or before it. Both directions then enumerate
/// exactly the chains with non-decreasing overlap starts.
///
/// Literal: forward windows must start and end strictly after the bound and
/// pass down the later of the two starts; reverse windows must start and end
/// strictly before it and pass down the earlier of the two ends.
enum class TimeRule { Ordered, Literal };

enum class StopRule {
  FirstCommonChain,  // stop once both directions completed a common chain
  Exhaustive,        // run both trees to the end
};

/// Called for every inclusiveness test with the probed label, the catalog
/// index, and the verdict. Must be thread-safe under threaded searches.
using ProbeObserver =
    std::function<void(const TupleLabel& label, std::size_t filter_index, kbloom::SubsetVerdict)>;

struct SearchConfig {
  SearchConfig(Username a, Username b) : endpoint_a(std::move(a)), endpoint_b(std::move(b)) {}

  Username endpoint_a;
  Username endpoint_b;
  /// Forward start time.
  Time t0 = 0;
  /// Reverse start time (end of the log horizon).
  Time horizon = 24;
  /// Cap on chain edges; unlimited when empty.
  std::optional<std::size_t> max_depth;
  bool prune_with_infection = false;
  epi::InfectionModelParams model_params;
  /// Defaults to epi::ExponentialModel when pruning without a model.
  std::shared_ptr<const epi::InfectionModel> model;
  TimeRule rule = TimeRule::Ordered;
  StopRule stop = StopRule::FirstCommonChain;
  ProbeObserver observer;
};

/// Throws ParameterError for equal endpoints, t0 > horizon or max_depth 0.
void validate(const SearchConfig& cfg);

struct TreeNode {
  Username user;
  /// Tree-oriented: `from` is the parent's interval, `to` this node's.
  std::optional<ContactEvidence> contact;
  std::optional<std::size_t> parent;
  std::vector<std::size_t> children;
  /// 0 for the root, else the round that created this node.
  std::size_t round_created = 0;
  /// Time bound passed to this node's expansion.
  Time bound = 0;
  std::size_t depth = 0;
};

struct ProximityTree {
  /// nodes[0] is the root; nodes are stored in creation order.
  std::vector<TreeNode> nodes;
  Direction direction = Direction::Forward;
  /// Node created in each round, rounds[r - 1] for round r.
  std::vector<std::size_t> rounds;
  /// The root user matched no catalog filter at all.
  bool no_contact_data = false;

  std::size_t node_count() const noexcept { return nodes.size(); }
  const TreeNode& root() const { return nodes.at(0); }
};

/// Users and contacts from the root to `node`, in A-to-B orientation: as
/// stored for forward trees, reversed with each contact's sides swapped for
/// reverse trees.
ProximityChain canonical_path(const ProximityTree& tree, std::size_t node);

/// Depth-first expansion that yields one created node per call.
class TreeExpander {
 public:
  /// Forward trees grow from endpoint_a toward endpoint_b starting at t0,
  /// reverse trees from endpoint_b toward endpoint_a starting at horizon.
  TreeExpander(const TelcoBoundary& oracle, const FilterCatalog& catalog, SearchConfig cfg,
               Direction direction);

  /// Creates the next node and returns its index, or nullopt when done.
  std::optional<std::size_t> step();

  bool exhausted() const noexcept { return stack_.empty(); }
  const ProximityTree& tree() const noexcept { return tree_; }
  const Username& target() const noexcept { return target_; }

  /// Runs to completion.
  ProximityTree finish();

 private:
  struct Child {
    Username user;
    ContactEvidence contact;
    Time bound;
  };
  struct Frame {
    std::size_t node;
    std::vector<Child> children;
    std::size_t next = 0;
  };

  kbloom::SubsetVerdict probe(const LabeledFilter& labeled, std::size_t filter_index) const;
  bool window_allowed(const TimeInterval& window, Time bound) const;
  std::optional<Time> child_bound(const TimeInterval& window, const TimeInterval& other,
                                  Time bound) const;
  std::vector<Child> expand(std::size_t node);
  bool survives_pruning(std::size_t parent, const Child& child) const;

  const TelcoBoundary& oracle_;
  const FilterCatalog& catalog_;
  SearchConfig cfg_;
  Username target_;
  ProximityTree tree_;
  std::vector<Frame> stack_;
};

/// Forward tree rooted at endpoint_a.
ProximityTree prox_tree(const TelcoBoundary& oracle, const FilterCatalog& catalog,
                        const SearchConfig& cfg);

/// Time-reversed tree rooted at endpoint_b.
ProximityTree reverse_prox_tree(const TelcoBoundary& oracle, const FilterCatalog& catalog,
                                const SearchConfig& cfg);

/// Every root path ending at `target`, in discovery order and A-to-B
/// orientation.
std::vector<ProximityChain> extract_chains(const ProximityTree& tree, const Username& target);

/// Whether the forward search under `cfg` would produce `chain`.
bool forward_admissible(const ProximityChain& chain, const SearchConfig& cfg);

/// Joins a forward partial A..X with a reverse partial X..B (both in A-to-B
/// orientation) when the result is a chain the forward search admits.
std::optional<ProximityChain> concatenate(const ProximityChain& head, const ProximityChain& tail,
                                          const SearchConfig& cfg);

enum class ChainSource { Forward, Reverse, Concatenation };

const char* to_string(ChainSource source) noexcept;

struct FoundChain {
  ProximityChain chain;
  std::size_t round = 0;
  ChainSource source = ChainSource::Forward;
};

struct RoundRecord {
  std::size_t round = 0;
  std::optional<Username> forward;
  std::optional<Username> reverse;
  /// Every chain completed or assembled in this round, repeats included.
  std::vector<FoundChain> found;
};

struct MeetReport {
  std::vector<RoundRecord> rounds;
  bool stopped_on_common_chain = false;
};

struct BidirectionalResult {
  /// Deduplicated by (users, contacts), keeping the earliest discovery.
  /// Sorted by round, then source, then chain.
  std::vector<FoundChain> chains;
  MeetReport report;
  ProximityTree forward_tree;
  ProximityTree reverse_tree;
};

/// Keeps the first discovery of each distinct chain.
class ChainCollector {
 public:
  void add(const ProximityChain& chain, std::size_t round, ChainSource source);
  std::vector<FoundChain> sorted() const;
  /// A chain completed by both unidirectional trees.
  bool has_common_chain() const noexcept { return common_; }

 private:
  struct Seen {
    FoundChain first;
    bool forward = false;
    bool reverse = false;
  };
  std::vector<Seen> seen_;
  bool common_ = false;
};

/// Forward and reverse trees expanded in lockstep, one node each per round.
/// Each round, a fresh forward node is compared with every reverse node so
/// far and a fresh reverse node with every earlier forward node; equal
/// non-endpoint usernames are joined via concatenate().
BidirectionalResult bidirectional_search(const TelcoBoundary& oracle,
                                         const FilterCatalog& catalog, const SearchConfig& cfg);

}  // namespace chaintrace::agency
