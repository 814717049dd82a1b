#include "chaintrace/agency/decentralized.hpp"

#include <atomic>
#include <barrier>
#include <exception>
#include <thread>

#include "chaintrace/errors.hpp"

namespace chaintrace::agency {
namespace {

std::size_t slot(Party party) { return party == Party::Forward ? 0 : 1; }

}  // namespace

Coordinator::Coordinator(Username endpoint_a, Username endpoint_b)
    : a_(std::move(endpoint_a)), b_(std::move(endpoint_b)) {}

void Coordinator::receive(const FrontierMessage& message) {
  if (message.round != round_) {
    throw ProtocolError("frontier for round " + std::to_string(message.round) +
                        " while round " + std::to_string(round_) + " is open");
  }
  auto& pending = pending_[slot(message.party)];
  if (pending) throw ProtocolError("party reported twice in round " + std::to_string(round_));
  pending = message;
  transcript_.emplace_back(message);
}

std::vector<MatchNotice> Coordinator::close_round() {
  if (!pending_[0] || !pending_[1]) {
    throw ProtocolError("round " + std::to_string(round_) + " closed before both parties reported");
  }
  const auto is_endpoint = [&](const Username& u) { return u == a_ || u == b_; };
  const auto& x = pending_[0]->username;
  const auto& y = pending_[1]->username;
  if (x) seen_[0].emplace_back(round_, *x);
  if (y) seen_[1].emplace_back(round_, *y);

  std::vector<MatchNotice> notices;
  if (x && !is_endpoint(*x)) {
    for (const auto& [r, name] : seen_[1]) {
      if (name == *x) notices.push_back({round_, r});
    }
  }
  if (y && !is_endpoint(*y)) {
    for (const auto& [r, name] : seen_[0]) {
      if (r != round_ && name == *y) notices.push_back({r, round_});
    }
  }
  for (const auto& n : notices) transcript_.emplace_back(n);
  pending_[0].reset();
  pending_[1].reset();
  ++round_;
  return notices;
}

void Coordinator::receive(const PartialChainMessage& message) { transcript_.emplace_back(message); }

SearchWorker::SearchWorker(Party party, const TelcoBoundary& oracle, const FilterCatalog& catalog,
                           const SearchConfig& cfg)
    : party_(party),
      expander_(oracle, catalog, cfg,
                party == Party::Forward ? Direction::Forward : Direction::Reverse) {}

FrontierMessage SearchWorker::advance() {
  ++round_;
  latest_ = expander_.step();
  FrontierMessage message{party_, round_, std::nullopt};
  if (latest_) message.username = tree().nodes[*latest_].user;
  return message;
}

std::optional<ProximityChain> SearchWorker::completed() const {
  if (!latest_ || tree().nodes[*latest_].user != expander_.target()) return std::nullopt;
  return canonical_path(tree(), *latest_);
}

std::size_t SearchWorker::node_of(std::size_t round) const {
  if (round == 0 || round > tree().rounds.size()) {
    throw ProtocolError("no node was created in round " + std::to_string(round));
  }
  return tree().rounds[round - 1];
}

PeerPartial SearchWorker::partial(std::size_t round) const {
  return PeerPartial{round, canonical_path(tree(), node_of(round))};
}

PartialChainMessage SearchWorker::partial_message(std::size_t round) const {
  return PartialChainMessage{party_, round, partial(round).chain.users};
}

namespace {

class Session {
 public:
  Session(SearchWorker& forward, SearchWorker& reverse, Coordinator& coordinator,
          const SearchConfig& cfg)
      : forward_(forward), reverse_(reverse), coordinator_(coordinator), cfg_(cfg) {}

  /// One coordinator round over the two frontier messages. Returns false
  /// when the protocol is over.
  bool settle(const FrontierMessage& from_forward, const FrontierMessage& from_reverse) {
    coordinator_.receive(from_forward);
    coordinator_.receive(from_reverse);
    const auto notices = coordinator_.close_round();
    if (!from_forward.username && !from_reverse.username) return false;

    const std::size_t round = from_forward.round;
    RoundRecord record{round, from_forward.username, from_reverse.username, {}};
    auto found = [&](const ProximityChain& chain, ChainSource source) {
      collector_.add(chain, round, source);
      record.found.push_back(FoundChain{chain, round, source});
    };
    if (auto chain = forward_.completed()) found(*chain, ChainSource::Forward);
    if (auto chain = reverse_.completed()) found(*chain, ChainSource::Reverse);
    for (const auto& n : notices) {
      coordinator_.receive(forward_.partial_message(n.forward_round));
      coordinator_.receive(reverse_.partial_message(n.reverse_round));
      // Evidence travels between the parties, not through the coordinator.
      const PeerPartial head = forward_.partial(n.forward_round);
      const PeerPartial tail = reverse_.partial(n.reverse_round);
      if (auto joined = concatenate(head.chain, tail.chain, cfg_)) {
        found(*joined, ChainSource::Concatenation);
      }
    }
    report_.rounds.push_back(std::move(record));
    if (cfg_.stop == StopRule::FirstCommonChain && collector_.has_common_chain()) {
      report_.stopped_on_common_chain = true;
      return false;
    }
    return true;
  }

  DecentralizedResult result() const {
    return DecentralizedResult{
        BidirectionalResult{collector_.sorted(), report_, forward_.tree(), reverse_.tree()},
        coordinator_.transcript()};
  }

 private:
  SearchWorker& forward_;
  SearchWorker& reverse_;
  Coordinator& coordinator_;
  const SearchConfig& cfg_;
  ChainCollector collector_;
  MeetReport report_;
};

void run_interleaved(Session& session, SearchWorker& forward, SearchWorker& reverse) {
  while (true) {
    const auto f = forward.advance();
    const auto v = reverse.advance();
    if (!session.settle(f, v)) return;
  }
}

void run_threaded(Session& session, SearchWorker& forward, SearchWorker& reverse) {
  FrontierMessage outbox[2];
  std::exception_ptr errors[2];
  std::exception_ptr settle_error;
  std::atomic<bool> done{false};

  auto on_round = [&]() noexcept {
    if (errors[0] || errors[1]) {
      done = true;
      return;
    }
    try {
      if (!session.settle(outbox[0], outbox[1])) done = true;
    } catch (...) {
      settle_error = std::current_exception();
      done = true;
    }
  };
  std::barrier sync(2, on_round);

  auto party_loop = [&](SearchWorker& worker, std::size_t i) {
    while (true) {
      try {
        outbox[i] = worker.advance();
      } catch (...) {
        errors[i] = std::current_exception();
      }
      sync.arrive_and_wait();
      if (done) return;
    }
  };
  {
    std::jthread t1(party_loop, std::ref(forward), std::size_t{0});
    std::jthread t2(party_loop, std::ref(reverse), std::size_t{1});
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  if (settle_error) std::rethrow_exception(settle_error);
}

}  // namespace

DecentralizedResult decentralized_bidirectional(SearchWorker& party1, SearchWorker& party2,
                                                Coordinator& coordinator,
                                                const SearchConfig& cfg, Scheduling scheduling) {
  if (party1.party() != Party::Forward || party2.party() != Party::Reverse) {
    throw ProtocolError("party 1 must search forward and party 2 in reverse");
  }
  if (party1.round() != party2.round() || party1.round() + 1 != coordinator.open_round()) {
    throw ProtocolError("workers and coordinator start out of step");
  }
  Session session(party1, party2, coordinator, cfg);
  if (party1.tree().no_contact_data || party2.tree().no_contact_data) return session.result();
  if (scheduling == Scheduling::Threaded) {
    run_threaded(session, party1, party2);
  } else {
    run_interleaved(session, party1, party2);
  }
  return session.result();
}

DecentralizedResult decentralized_bidirectional(const TelcoBoundary& oracle,
                                                const FilterCatalog& catalog,
                                                const SearchConfig& cfg, Scheduling scheduling) {
  SearchWorker party1(Party::Forward, oracle, catalog, cfg);
  SearchWorker party2(Party::Reverse, oracle, catalog, cfg);
  Coordinator coordinator(cfg.endpoint_a, cfg.endpoint_b);
  return decentralized_bidirectional(party1, party2, coordinator, cfg, scheduling);
}

}  // namespace chaintrace::agency
