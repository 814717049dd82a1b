#include <doctest.h>

#include <type_traits>

#include "chaintrace/agency/decentralized.hpp"
#include "chaintrace/errors.hpp"
#include "support.hpp"

using namespace chaintrace;
using namespace chaintrace::agency;

namespace {

const Username A("A"), B("B");

void check_same(const BidirectionalResult& x, const BidirectionalResult& y) {
  REQUIRE(x.chains.size() == y.chains.size());
  for (std::size_t i = 0; i < x.chains.size(); ++i) {
    CHECK(x.chains[i].chain == y.chains[i].chain);
    CHECK(x.chains[i].round == y.chains[i].round);
    CHECK(x.chains[i].source == y.chains[i].source);
  }
  REQUIRE(x.report.rounds.size() == y.report.rounds.size());
  for (std::size_t i = 0; i < x.report.rounds.size(); ++i) {
    const auto& p = x.report.rounds[i];
    const auto& q = y.report.rounds[i];
    CHECK(p.round == q.round);
    CHECK(p.forward == q.forward);
    CHECK(p.reverse == q.reverse);
    REQUIRE(p.found.size() == q.found.size());
    for (std::size_t k = 0; k < p.found.size(); ++k) CHECK(p.found[k].chain == q.found[k].chain);
  }
  CHECK(x.report.stopped_on_common_chain == y.report.stopped_on_common_chain);
  CHECK(x.forward_tree.node_count() == y.forward_tree.node_count());
  CHECK(x.reverse_tree.node_count() == y.reverse_tree.node_count());
}

}  // namespace

TEST_CASE("toy decentralized search equals the bidirectional search") {
  const auto t = testing::toy_telco();
  const auto catalog = t->catalog();
  for (auto stop : {StopRule::FirstCommonChain, StopRule::Exhaustive}) {
    SearchConfig cfg(A, B);
    cfg.stop = stop;
    const auto expected = bidirectional_search(*t, catalog, cfg);
    for (auto mode : {Scheduling::Interleaved, Scheduling::Threaded}) {
      const auto got = decentralized_bidirectional(*t, catalog, cfg, mode);
      check_same(got.result, expected);
    }
  }
}

TEST_CASE("decentralized search equals bidirectional on random fixtures") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto logs = testing::random_logs(seed, 8);
    const auto t = testing::make_telco(logs, seed);
    const auto catalog = t->catalog();
    SearchConfig cfg(A, B);
    cfg.stop = seed % 2 ? StopRule::Exhaustive : StopRule::FirstCommonChain;
    const auto expected = bidirectional_search(*t, catalog, cfg);
    check_same(decentralized_bidirectional(*t, catalog, cfg, Scheduling::Interleaved).result,
               expected);
    check_same(decentralized_bidirectional(*t, catalog, cfg, Scheduling::Threaded).result,
               expected);
  }
}

TEST_CASE("transcript holds usernames and rounds only") {
  static_assert(std::is_same_v<decltype(FrontierMessage::username), std::optional<Username>>);
  static_assert(std::is_same_v<decltype(PartialChainMessage::users), std::vector<Username>>);
  static_assert(std::is_same_v<decltype(MatchNotice::forward_round), std::size_t>);
  static_assert(std::variant_size_v<TranscriptEntry> == 3);

  const auto t = testing::toy_telco();
  const auto catalog = t->catalog();
  SearchConfig cfg(A, B);
  cfg.stop = StopRule::Exhaustive;
  const auto run = decentralized_bidirectional(*t, catalog, cfg);
  std::size_t frontiers = 0, matches = 0, partials = 0;
  for (const auto& entry : run.transcript) {
    if (const auto* f = std::get_if<FrontierMessage>(&entry)) {
      ++frontiers;
      CHECK(f->round >= 1);
    } else if (std::get_if<MatchNotice>(&entry)) {
      ++matches;
    } else {
      const auto& p = std::get<PartialChainMessage>(entry);
      ++partials;
      CHECK(p.users.size() >= 2);
    }
  }
  // 18 forward rounds, then one round of empty frontiers.
  CHECK(frontiers == 2 * 19);
  CHECK(matches > 0);
  CHECK(partials == 2 * matches);
}

TEST_CASE("no match leaves no concatenations") {
  // A and B meet directly; nobody else exists.
  const std::vector<BaseStationLog> logs{
      BaseStationLog{"s", {ConnectionRecord{A, {1, 5}}, ConnectionRecord{B, {3, 9}}}}};
  const auto t = testing::make_telco(logs, 4);
  const auto catalog = t->catalog();
  const auto run = decentralized_bidirectional(*t, catalog, SearchConfig(A, B));
  for (const auto& entry : run.transcript) CHECK_FALSE(std::holds_alternative<MatchNotice>(entry));
  for (const auto& c : run.result.chains) CHECK(c.source != ChainSource::Concatenation);
  REQUIRE(run.result.chains.size() == 1);
  CHECK(run.result.chains[0].round == 1);
}

TEST_CASE("desynchronized parties are rejected") {
  const auto t = testing::toy_telco();
  const auto catalog = t->catalog();
  const SearchConfig cfg(A, B);
  SearchWorker p1(Party::Forward, *t, catalog, cfg);
  SearchWorker p2(Party::Reverse, *t, catalog, cfg);
  Coordinator coordinator(A, B);
  p1.advance();
  CHECK_THROWS_AS(decentralized_bidirectional(p1, p2, coordinator, cfg), ProtocolError);

  SearchWorker q1(Party::Forward, *t, catalog, cfg);
  SearchWorker q2(Party::Reverse, *t, catalog, cfg);
  CHECK_THROWS_AS(decentralized_bidirectional(q2, q1, coordinator, cfg), ProtocolError);

  Coordinator c(A, B);
  c.receive(FrontierMessage{Party::Forward, 1, Username("C")});
  CHECK_THROWS_AS(c.receive(FrontierMessage{Party::Forward, 1, Username("G")}), ProtocolError);
  CHECK_THROWS_AS(c.receive(FrontierMessage{Party::Reverse, 2, A}), ProtocolError);
  CHECK_THROWS_AS(c.close_round(), ProtocolError);
  c.receive(FrontierMessage{Party::Reverse, 1, A});
  CHECK(c.close_round().empty());
  CHECK(c.open_round() == 2);
  CHECK_THROWS_AS(p2.partial(5), ProtocolError);
}

TEST_CASE("coordinator matches frontier usernames across rounds") {
  Coordinator c(A, B);
  c.receive(FrontierMessage{Party::Forward, 1, Username("C")});
  c.receive(FrontierMessage{Party::Reverse, 1, Username("G")});
  CHECK(c.close_round().empty());
  c.receive(FrontierMessage{Party::Forward, 2, Username("G")});
  c.receive(FrontierMessage{Party::Reverse, 2, Username("C")});
  const auto notices = c.close_round();
  REQUIRE(notices.size() == 2);
  CHECK(notices[0].forward_round == 2);
  CHECK(notices[0].reverse_round == 1);
  CHECK(notices[1].forward_round == 1);
  CHECK(notices[1].reverse_round == 2);
  // Endpoints never match.
  c.receive(FrontierMessage{Party::Forward, 3, B});
  c.receive(FrontierMessage{Party::Reverse, 3, A});
  CHECK(c.close_round().empty());
}
