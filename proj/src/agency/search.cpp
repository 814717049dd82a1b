#include "chaintrace/agency/search.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "chaintrace/errors.hpp"

namespace chaintrace::agency {
namespace {

const epi::InfectionModel& model_of(const SearchConfig& cfg) {
  static const epi::ExponentialModel fallback;
  return cfg.model ? *cfg.model : fallback;
}

ContactEvidence swapped(const ContactEvidence& c) { return {c.filter_index, c.to, c.from}; }

}  // namespace

void validate(const SearchConfig& cfg) {
  if (cfg.endpoint_a == cfg.endpoint_b) throw ParameterError("endpoints must differ");
  if (cfg.t0 > cfg.horizon) throw ParameterError("t0 lies after the horizon");
  if (cfg.max_depth && *cfg.max_depth == 0) throw ParameterError("max_depth must be positive");
  if (cfg.prune_with_infection) epi::validate(cfg.model_params);
}

ProximityChain canonical_path(const ProximityTree& tree, std::size_t node) {
  ProximityChain path;
  for (std::optional<std::size_t> at = node; at; at = tree.nodes.at(*at).parent) {
    const auto& n = tree.nodes[*at];
    path.users.push_back(n.user);
    if (n.contact) path.contacts.push_back(*n.contact);
  }
  // Collected leaf-to-root.
  if (tree.direction == Direction::Forward) {
    std::reverse(path.users.begin(), path.users.end());
    std::reverse(path.contacts.begin(), path.contacts.end());
  } else {
    for (auto& c : path.contacts) c = swapped(c);
  }
  return path;
}

TreeExpander::TreeExpander(const TelcoBoundary& oracle, const FilterCatalog& catalog,
                           SearchConfig cfg, Direction direction)
    : oracle_(oracle),
      catalog_(catalog),
      cfg_(std::move(cfg)),
      target_(direction == Direction::Forward ? cfg_.endpoint_b : cfg_.endpoint_a) {
  validate(cfg_);
  tree_.direction = direction;
  const bool forward = direction == Direction::Forward;
  tree_.nodes.push_back(TreeNode{forward ? cfg_.endpoint_a : cfg_.endpoint_b, std::nullopt,
                                 std::nullopt, {}, 0, forward ? cfg_.t0 : cfg_.horizon, 0});

  bool seen = false;
  for (const auto& own : oracle_.request_own_tuples(tree_.root().user, {kTimeMin, kTimeMax})) {
    for (std::size_t j = 0; j < catalog_.station_filters.size() && !seen; ++j) {
      seen = probe(own, j) == kbloom::SubsetVerdict::SubsetLikely;
    }
    if (seen) break;
  }
  tree_.no_contact_data = !seen;
  if (seen) stack_.push_back(Frame{0, expand(0)});
}

kbloom::SubsetVerdict TreeExpander::probe(const LabeledFilter& labeled,
                                          std::size_t filter_index) const {
  const auto verdict = kbloom::is_subset(labeled.filter, catalog_.station_filters.at(filter_index));
  if (cfg_.observer) cfg_.observer(labeled.label, filter_index, verdict);
  return verdict;
}

bool TreeExpander::window_allowed(const TimeInterval& w, Time bound) const {
  const bool forward = tree_.direction == Direction::Forward;
  if (cfg_.rule == TimeRule::Ordered) return forward ? w.end() >= bound : w.start() <= bound;
  return forward ? (w.start() > bound && w.end() > bound) : (w.start() < bound && w.end() < bound);
}

std::optional<Time> TreeExpander::child_bound(const TimeInterval& w, const TimeInterval& other,
                                              Time bound) const {
  const bool forward = tree_.direction == Direction::Forward;
  const Time start = std::max(w.start(), other.start());
  if (cfg_.rule == TimeRule::Literal) {
    return forward ? start : std::min(w.end(), other.end());
  }
  if (forward ? start < bound : start > bound) return std::nullopt;
  return start;
}

std::vector<TreeExpander::Child> TreeExpander::expand(std::size_t node_index) {
  const TreeNode node = tree_.nodes[node_index];
  if (node.user == target_) return {};
  if (cfg_.max_depth && node.depth >= *cfg_.max_depth) return {};

  std::set<Username> excluded;
  for (std::optional<std::size_t> at = node_index; at; at = tree_.nodes[*at].parent) {
    excluded.insert(tree_.nodes[*at].user);
  }

  const bool forward = tree_.direction == Direction::Forward;
  const TimeInterval reach = forward ? TimeInterval::from(node.bound) : TimeInterval::until(node.bound);
  std::vector<std::pair<std::size_t, TimeInterval>> windows;
  for (const auto& own : oracle_.request_own_tuples(node.user, reach)) {
    if (!window_allowed(own.label.interval, node.bound)) continue;
    for (std::size_t j = 0; j < catalog_.station_filters.size(); ++j) {
      if (probe(own, j) == kbloom::SubsetVerdict::SubsetLikely) {
        windows.emplace_back(j, own.label.interval);
      }
    }
  }
  std::sort(windows.begin(), windows.end());
  windows.erase(std::unique(windows.begin(), windows.end()), windows.end());
  if (windows.empty()) return {};

  std::vector<CandidateQuery> queries;
  queries.reserve(windows.size());
  for (const auto& [j, w] : windows) queries.push_back({node.user, w});
  const auto candidates = oracle_.request_candidate_filters(queries);

  std::vector<Child> children;
  for (const auto& cand : candidates) {
    const auto& [j, w] = windows.at(cand.query_index);
    const auto& label = cand.labeled.label;
    if (excluded.count(label.user) != 0) continue;
    if (!intervals_overlap(w, label.interval)) continue;
    const auto bound = child_bound(w, label.interval, node.bound);
    if (!bound) continue;
    if (probe(cand.labeled, j) != kbloom::SubsetVerdict::SubsetLikely) continue;
    children.push_back(Child{label.user, ContactEvidence{j, w, label.interval}, *bound});
  }
  std::sort(children.begin(), children.end(), [](const Child& a, const Child& b) {
    return std::tie(a.contact.filter_index, a.contact.from, a.user, a.contact.to) <
           std::tie(b.contact.filter_index, b.contact.from, b.user, b.contact.to);
  });
  return children;
}

bool TreeExpander::survives_pruning(std::size_t parent, const Child& child) const {
  if (!cfg_.prune_with_infection) return true;
  ProximityChain partial = canonical_path(tree_, parent);
  if (tree_.direction == Direction::Forward) {
    partial.users.push_back(child.user);
    partial.contacts.push_back(child.contact);
  } else {
    partial.users.insert(partial.users.begin(), child.user);
    partial.contacts.insert(partial.contacts.begin(), swapped(child.contact));
  }
  return epi::prune_predicate(partial, target_, cfg_.model_params, model_of(cfg_));
}

std::optional<std::size_t> TreeExpander::step() {
  while (!stack_.empty()) {
    Frame& frame = stack_.back();
    if (frame.next == frame.children.size()) {
      stack_.pop_back();
      continue;
    }
    const Child child = frame.children[frame.next++];
    const std::size_t parent = frame.node;
    if (!survives_pruning(parent, child)) continue;

    const std::size_t id = tree_.nodes.size();
    tree_.nodes.push_back(TreeNode{child.user, child.contact, parent, {}, tree_.rounds.size() + 1,
                                   child.bound, tree_.nodes[parent].depth + 1});
    tree_.nodes[parent].children.push_back(id);
    tree_.rounds.push_back(id);
    auto grandchildren = expand(id);
    if (!grandchildren.empty()) stack_.push_back(Frame{id, std::move(grandchildren)});
    return id;
  }
  return std::nullopt;
}

ProximityTree TreeExpander::finish() {
  while (step()) {
  }
  return tree_;
}

ProximityTree prox_tree(const TelcoBoundary& oracle, const FilterCatalog& catalog,
                        const SearchConfig& cfg) {
  return TreeExpander(oracle, catalog, cfg, Direction::Forward).finish();
}

ProximityTree reverse_prox_tree(const TelcoBoundary& oracle, const FilterCatalog& catalog,
                                const SearchConfig& cfg) {
  return TreeExpander(oracle, catalog, cfg, Direction::Reverse).finish();
}

std::vector<ProximityChain> extract_chains(const ProximityTree& tree, const Username& target) {
  std::vector<ProximityChain> out;
  for (std::size_t id : tree.rounds) {
    if (tree.nodes[id].user == target) out.push_back(canonical_path(tree, id));
  }
  return out;
}

bool forward_admissible(const ProximityChain& chain, const SearchConfig& cfg) {
  if (chain.users.size() < 2 || chain.contacts.size() + 1 != chain.users.size()) return false;
  if (chain.users.front() != cfg.endpoint_a || chain.users.back() != cfg.endpoint_b) return false;
  if (cfg.max_depth && chain.contacts.size() > *cfg.max_depth) return false;
  std::set<Username> users(chain.users.begin(), chain.users.end());
  if (users.size() != chain.users.size()) return false;
  Time bound = cfg.t0;
  for (const auto& c : chain.contacts) {
    if (!intervals_overlap(c.from, c.to)) return false;
    const Time start = std::max(c.from.start(), c.to.start());
    if (cfg.rule == TimeRule::Ordered) {
      if (start < bound) return false;
    } else if (!(c.from.start() > bound && c.from.end() > bound)) {
      return false;
    }
    bound = start;
  }
  return true;
}

std::optional<ProximityChain> concatenate(const ProximityChain& head, const ProximityChain& tail,
                                          const SearchConfig& cfg) {
  if (head.users.empty() || tail.users.empty() || head.users.back() != tail.users.front()) {
    return std::nullopt;
  }
  ProximityChain joined = head;
  joined.users.insert(joined.users.end(), tail.users.begin() + 1, tail.users.end());
  joined.contacts.insert(joined.contacts.end(), tail.contacts.begin(), tail.contacts.end());
  if (!forward_admissible(joined, cfg)) return std::nullopt;
  if (chain_violation(joined)) return std::nullopt;
  if (cfg.prune_with_infection &&
      !epi::prune_predicate(joined, cfg.endpoint_b, cfg.model_params, model_of(cfg))) {
    return std::nullopt;
  }
  return joined;
}

const char* to_string(ChainSource source) noexcept {
  switch (source) {
    case ChainSource::Forward:
      return "forward";
    case ChainSource::Reverse:
      return "reverse";
    case ChainSource::Concatenation:
      return "concatenation";
  }
  return "?";
}

void ChainCollector::add(const ProximityChain& chain, std::size_t round, ChainSource source) {
  auto it = std::find_if(seen_.begin(), seen_.end(),
                         [&](const Seen& s) { return s.first.chain == chain; });
  if (it == seen_.end()) {
    seen_.push_back(Seen{FoundChain{chain, round, source}, false, false});
    it = seen_.end() - 1;
  }
  if (source == ChainSource::Forward) it->forward = true;
  if (source == ChainSource::Reverse) it->reverse = true;
  if (it->forward && it->reverse) common_ = true;
}

std::vector<FoundChain> ChainCollector::sorted() const {
  std::vector<FoundChain> out;
  for (const auto& s : seen_) out.push_back(s.first);
  std::stable_sort(out.begin(), out.end(), [](const FoundChain& a, const FoundChain& b) {
    return std::tie(a.round, a.source, a.chain) < std::tie(b.round, b.source, b.chain);
  });
  return out;
}

BidirectionalResult bidirectional_search(const TelcoBoundary& oracle,
                                         const FilterCatalog& catalog, const SearchConfig& cfg) {
  TreeExpander fwd(oracle, catalog, cfg, Direction::Forward);
  TreeExpander rev(oracle, catalog, cfg, Direction::Reverse);
  const auto is_endpoint = [&](const Username& u) {
    return u == cfg.endpoint_a || u == cfg.endpoint_b;
  };

  ChainCollector collector;
  MeetReport report;
  // An endpoint without records can lie on no chain.
  if (fwd.tree().no_contact_data || rev.tree().no_contact_data) {
    return BidirectionalResult{{}, std::move(report), fwd.tree(), rev.tree()};
  }
  for (std::size_t round = 1; !(fwd.exhausted() && rev.exhausted()); ++round) {
    const auto f = fwd.step();
    const auto v = rev.step();
    if (!f && !v) break;
    const auto& ft = fwd.tree();
    const auto& rt = rev.tree();
    RoundRecord record{round, std::nullopt, std::nullopt, {}};
    auto found = [&](const ProximityChain& chain, ChainSource source) {
      collector.add(chain, round, source);
      record.found.push_back(FoundChain{chain, round, source});
    };

    if (f) {
      record.forward = ft.nodes[*f].user;
      if (ft.nodes[*f].user == cfg.endpoint_b) found(canonical_path(ft, *f), ChainSource::Forward);
    }
    if (v) {
      record.reverse = rt.nodes[*v].user;
      if (rt.nodes[*v].user == cfg.endpoint_a) found(canonical_path(rt, *v), ChainSource::Reverse);
    }
    if (f && !is_endpoint(ft.nodes[*f].user)) {
      const auto head = canonical_path(ft, *f);
      for (std::size_t r : rt.rounds) {
        if (rt.nodes[r].user != ft.nodes[*f].user) continue;
        if (auto joined = concatenate(head, canonical_path(rt, r), cfg)) {
          found(*joined, ChainSource::Concatenation);
        }
      }
    }
    if (v && !is_endpoint(rt.nodes[*v].user)) {
      const auto tail = canonical_path(rt, *v);
      for (std::size_t r : ft.rounds) {
        if (f && r == *f) continue;
        if (ft.nodes[r].user != rt.nodes[*v].user) continue;
        if (auto joined = concatenate(canonical_path(ft, r), tail, cfg)) {
          found(*joined, ChainSource::Concatenation);
        }
      }
    }
    report.rounds.push_back(std::move(record));
    if (cfg.stop == StopRule::FirstCommonChain && collector.has_common_chain()) {
      report.stopped_on_common_chain = true;
      break;
    }
  }
  return BidirectionalResult{collector.sorted(), std::move(report), fwd.tree(), rev.tree()};
}

}  // namespace chaintrace::agency
