// chaintrace: fixture generation, chain tracing, re-seeding and disclosure.
//
// Exit codes: 0 ok, 1 other failure, 2 usage, 3 parse, 4 policy refusal,
// 5 no contact data, 6 I/O, 7 unknown user or chain.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "chaintrace/errors.hpp"
#include "chaintrace/logmodel/logs.hpp"
#include "pipeline.hpp"

namespace fs = std::filesystem;
using namespace chaintrace;

namespace {

enum Exit : int {
  kOk = 0,
  kOther = 1,
  kUsage = 2,
  kParse = 3,
  kRefused = 4,
  kNoContact = 5,
  kIo = 6,
  kLookup = 7,
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void copy_to(const fs::path& from, const fs::path& to) {
  std::error_code ec;
  fs::copy_file(from, to, fs::copy_options::overwrite_existing, ec);
  if (ec) throw IoError("cannot write " + to.string() + ": " + ec.message());
}

void print_chains(const cli::TraceOutcome& outcome) {
  for (const auto& e : outcome.chains) {
    std::cout << join_users(e.chain.users) << "  round " << e.round << "  " << e.verdict
              << "  overall " << e.overall << '\n';
  }
  std::cout << outcome.chains.size() << " chain(s); inclusion verdicts may carry Bloom false "
            << "positives\n";
}

struct GenArgs {
  std::size_t users = 7;
  std::size_t stations = 3;
  Time horizon = 24;
  std::size_t records = 11;
  std::uint64_t seed = 1;
  std::string logs;
  std::string escrow;
};

int cmd_gen(const GenArgs& a) {
  LogShape shape{a.users, a.stations, a.horizon, a.records};
  Rng rng(a.seed);
  std::vector<BaseStationLog> logs;
  try {
    logs = generate_logs(shape, rng);
  } catch (const ParameterError& e) {
    throw UsageError(e.what());
  }
  const fs::path logs_path = a.logs;
  const fs::path escrow_path = a.escrow.empty() ? logs_path.parent_path() / "escrow.csv" : fs::path(a.escrow);
  if (logs_path.has_parent_path()) fs::create_directories(logs_path.parent_path());
  if (escrow_path.has_parent_path()) fs::create_directories(escrow_path.parent_path());
  save_logs(logs, logs_path);
  telco::save_escrow(telco::synthetic_escrow(logs), escrow_path);
  std::cout << record_count(logs) << " record(s) over " << logs.size() << " station(s) -> "
            << logs_path.string() << '\n';
  return kOk;
}

struct TraceArgs {
  std::string config;
  std::string fixture;
  std::string escrow;
  std::string from;
  std::string to;
  Time t0 = 0;
  Time horizon = 24;
  bool reverse = false;
  bool bidir = false;
  bool decentralized = false;
  bool deterministic = false;
  bool prune = false;
  double tr = 0.5;
  double lambda = 0.1;
  double reproduction_number = 1.0;
  double saturation = 0.0;
  double contact_distance = 1.0;
  std::string rule;
  std::string stop;
  std::size_t max_depth = 0;
  std::size_t m = kbloom::kDefaultBits;
  std::uint32_t k_min = 4;
  std::uint32_t k_max = 8;
  std::string hash;
  std::uint64_t seed = 1;
  std::string out;
  std::string dot;
  std::string report;
  bool round_log = false;
};

cli::RunManifest manifest_from(const TraceArgs& a, const CLI::App& app) {
  cli::RunManifest m;
  if (!a.config.empty()) cli::apply(m, cli::read_key_values(a.config));
  auto given = [&](const char* name) { return app.count(name) > 0; };
  cli::KeyValues flags;
  if (given("--fixture")) m.fixture = a.fixture;
  if (given("--escrow")) m.escrow = a.escrow;
  if (given("--from")) m.from = a.from;
  if (given("--to")) m.to = a.to;
  if (given("--t0")) m.t0 = a.t0;
  if (given("--horizon")) m.horizon = a.horizon;
  if (a.reverse) m.mode = cli::Mode::Reverse;
  if (a.bidir) m.mode = cli::Mode::Bidirectional;
  if (a.decentralized) m.mode = cli::Mode::Decentralized;
  if (a.deterministic) m.deterministic = true;
  if (a.prune) m.prune = true;
  if (given("--tr")) m.model.tr = a.tr;
  if (given("--lambda")) m.lambda = a.lambda;
  if (given("--reproduction-number")) m.model.reproduction_number = a.reproduction_number;
  if (given("--saturation")) m.model.saturation = a.saturation;
  if (given("--contact-distance")) m.model.contact_distance = a.contact_distance;
  if (given("--rule")) flags["rule"] = a.rule;
  if (given("--stop")) flags["stop"] = a.stop;
  if (given("--max-depth")) m.max_depth = a.max_depth;
  if (given("--m")) m.m = a.m;
  if (given("--k-min")) m.k_min = a.k_min;
  if (given("--k-max")) m.k_max = a.k_max;
  if (given("--hash")) m.hash = a.hash;
  if (given("--seed")) m.seed = a.seed;
  if (given("--out")) m.out = a.out;
  cli::apply(m, flags);
  if (m.fixture.empty()) throw UsageError("--fixture is required");
  if (m.from.empty() || m.to.empty()) throw UsageError("--from and --to are required");
  if (m.from == m.to) throw UsageError("--from and --to must differ");
  return m;
}

int cmd_trace(const TraceArgs& a, const CLI::App& app) {
  const auto manifest = manifest_from(a, app);
  std::unique_ptr<telco::Telco> oracle;
  try {
    oracle = cli::make_telco(manifest);
  } catch (const ParameterError& e) {
    throw UsageError(e.what());
  }
  const auto outcome = cli::run_trace(manifest, *oracle, true);
  if (!a.dot.empty()) copy_to(manifest.out / "tree.dot", a.dot);
  if (!a.report.empty()) copy_to(manifest.out / "chains.csv", a.report);
  if (a.round_log) {
    std::ifstream in(manifest.out / "rounds.csv");
    std::cout << in.rdbuf();
  }
  print_chains(outcome);
  if (outcome.no_contact_data) {
    std::cerr << "warning: an endpoint matched no catalog filter (no contact data)\n";
    return kNoContact;
  }
  return kOk;
}

struct ReseedArgs {
  std::string prior;
  std::size_t max_iterations = 3;
  std::string out;
  std::vector<std::string> order;
};

int cmd_reseed(const ReseedArgs& a) {
  const fs::path prior = a.prior;
  cli::RunManifest base;
  cli::apply(base, cli::read_key_values(prior / "manifest.txt"));
  const fs::path out = a.out.empty() ? prior / "reseed" : fs::path(a.out);
  fs::create_directories(out);

  std::set<epi::UserPair> ordered;
  for (const auto& text : a.order) {
    const auto users = split_users(text);
    if (users.size() != 2) throw UsageError("--order takes EARLIER;LATER");
    ordered.emplace(users[0], users[1]);
  }

  auto confirmed = cli::read_confirmed(prior / "evaluation.csv", base.model.tr);
  std::set<epi::UserPair> known{{Username(base.from), Username(base.to)}};
  std::ostringstream summary;
  std::ostringstream chains;
  summary << "iteration,from,to,chains,confirmed\n";
  chains << "iteration,from,to,chain,verdict,edge_evidence\n";
  summary << 1 << ',' << base.from << ',' << base.to << ','
          << cli::read_evaluation(prior / "evaluation.csv", base.model.tr).size() << ','
          << confirmed.size() << '\n';

  const auto oracle = cli::make_telco(base);
  std::size_t runs = 0;
  for (std::size_t iteration = 2; iteration <= a.max_iterations; ++iteration) {
    const auto queue = epi::reseed(confirmed, known, ordered);
    if (queue.empty()) break;
    std::vector<InfectionChain> fresh;
    for (const auto& [from, to] : queue) {
      known.emplace(from, to);
      cli::RunManifest m = base;
      m.from = from.str();
      m.to = to.str();
      const auto outcome = cli::run_trace(m, *oracle, false);
      ++runs;
      std::size_t hits = 0;
      for (const auto& e : outcome.chains) {
        chains << iteration << ',' << m.from << ',' << m.to << ',' << join_users(e.chain.users)
               << ',' << e.verdict << ',' << agency::format_evidence(e.chain) << '\n';
        if (e.verdict == "infection") {
          fresh.push_back(InfectionChain{e.chain, e.edge_probabilities, e.overall, m.model.tr});
          ++hits;
        }
      }
      summary << iteration << ',' << m.from << ',' << m.to << ',' << outcome.chains.size() << ','
              << hits << '\n';
      std::cout << "iteration " << iteration << ": " << m.from << " -> " << m.to << ", "
                << outcome.chains.size() << " chain(s), " << hits << " confirmed\n";
    }
    confirmed.insert(confirmed.end(), fresh.begin(), fresh.end());
  }
  std::ofstream(out / "reseed.csv", std::ios::binary | std::ios::trunc) << summary.str();
  std::ofstream(out / "reseed_chains.csv", std::ios::binary | std::ios::trunc) << chains.str();
  std::cout << runs << " new trace run(s)\n";
  return kOk;
}

struct RevealArgs {
  std::string trace;
  std::string chain;
  std::string escrow;
  std::string audit;
  std::string note;
};

int cmd_reveal(const RevealArgs& a) {
  const fs::path dir = a.trace;
  cli::RunManifest m;
  cli::apply(m, cli::read_key_values(dir / "manifest.txt"));
  if (!a.escrow.empty()) m.escrow = a.escrow;
  if (!m.escrow) throw UsageError("no escrow file configured; pass --escrow");
  if (!fs::exists(*m.escrow)) throw IoError("escrow file " + m.escrow->string() + " not found");

  const auto rows = cli::read_evaluation(dir / "evaluation.csv", m.model.tr);
  const InfectionChain* chosen = nullptr;
  for (const auto& [verdict, chain] : rows) {
    if (join_users(chain.chain.users) == a.chain) {
      chosen = &chain;
      break;
    }
  }
  if (!chosen) throw LookupError("chain " + a.chain + " is not in " + (dir / "evaluation.csv").string());

  const fs::path audit = a.audit.empty() ? dir / "audit.csv" : fs::path(a.audit);
  const auto oracle = cli::make_telco(m, audit);
  for (const auto& [user, identity] : oracle->reveal_identities(*chosen, a.note)) {
    std::cout << user.str() << ',' << identity << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Infection-chain tracing over keyed Bloom filter catalogs"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "generate a random log fixture and escrow");
  g->add_option("--users", gen.users, "number of users")->capture_default_str();
  g->add_option("--stations", gen.stations, "number of base stations")->capture_default_str();
  g->add_option("--horizon", gen.horizon, "latest time unit")->capture_default_str();
  g->add_option("--records", gen.records, "total connection records")->capture_default_str();
  g->add_option("--seed", gen.seed, "random seed")->capture_default_str();
  g->add_option("--logs", gen.logs, "output log CSV")->required();
  g->add_option("--escrow", gen.escrow, "output escrow CSV (default: escrow.csv next to --logs)");

  TraceArgs tr;
  auto* t = app.add_subcommand("trace", "trace proximity chains between two infected users");
  t->add_option("--config", tr.config, "key=value file; flags override it");
  t->add_option("--fixture", tr.fixture, "log CSV");
  t->add_option("--escrow", tr.escrow, "escrow CSV");
  t->add_option("--from", tr.from, "first infected user (A)");
  t->add_option("--to", tr.to, "second infected user (B)");
  t->add_option("--t0", tr.t0, "forward start time");
  t->add_option("--horizon", tr.horizon, "reverse start time (default: max(24, latest record end))");
  auto* rev = t->add_flag("--reverse", tr.reverse, "time-reversed search from B");
  auto* bid = t->add_flag("--bidir", tr.bidir, "forward and reverse in lockstep");
  auto* dec = t->add_flag("--decentralized", tr.decentralized, "two parties and a coordinator");
  rev->excludes(bid)->excludes(dec);
  bid->excludes(dec);
  t->add_flag("--deterministic", tr.deterministic, "single-threaded interleaved scheduling");
  t->add_flag("--prune", tr.prune, "drop branches that cannot pass the threshold");
  t->add_option("--tr", tr.tr, "promotion threshold");
  t->add_option("--lambda", tr.lambda, "default model rate");
  t->add_option("--reproduction-number", tr.reproduction_number, "R");
  t->add_option("--saturation", tr.saturation, "infected fraction");
  t->add_option("--contact-distance", tr.contact_distance, "distance proxy");
  t->add_option("--rule", tr.rule, "ordered or literal")->check(CLI::IsMember({"ordered", "literal"}));
  t->add_option("--stop", tr.stop, "first-common or exhaustive")
      ->check(CLI::IsMember({"first-common", "exhaustive"}));
  t->add_option("--max-depth", tr.max_depth, "cap on chain edges")->check(CLI::PositiveNumber);
  t->add_option("--m", tr.m, "filter bits");
  t->add_option("--k-min", tr.k_min, "lower key count bound");
  t->add_option("--k-max", tr.k_max, "upper key count bound");
  t->add_option("--hash", tr.hash, "HMAC construction");
  t->add_option("--seed", tr.seed, "seed for filter setup and station shuffle");
  t->add_option("--out", tr.out, "output directory (default: out)");
  t->add_option("--dot", tr.dot, "extra copy of tree.dot");
  t->add_option("--report", tr.report, "extra copy of chains.csv");
  t->add_flag("--round-log", tr.round_log, "print the round trace");

  ReseedArgs rs;
  auto* r = app.add_subcommand("reseed", "trace pairs among newly confirmed infected users");
  r->add_option("--prior", rs.prior, "output directory of an earlier trace")->required();
  r->add_option("--max-iterations", rs.max_iterations, "iterations including the prior trace")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  r->add_option("--out", rs.out, "output directory (default: PRIOR/reseed)");
  r->add_option("--order", rs.order, "EARLIER;LATER known infection order, repeatable");

  RevealArgs rv;
  auto* v = app.add_subcommand("reveal", "request identities for a confirmed infection chain");
  v->add_option("--trace", rv.trace, "output directory of a trace")->required();
  v->add_option("--chain", rv.chain, "users as A;C;G;B")->required();
  v->add_option("--escrow", rv.escrow, "escrow CSV (default: the trace's)");
  v->add_option("--audit", rv.audit, "audit CSV (default: TRACE/audit.csv)");
  v->add_option("--note", rv.note, "requester note for the audit entry");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*g) return cmd_gen(gen);
    if (*t) return cmd_trace(tr, *t);
    if (*r) return cmd_reseed(rs);
    if (*v) return cmd_reveal(rv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kParse;
  } catch (const PolicyRefusal& e) {
    std::cerr << "refused: " << e.what() << '\n';
    return kRefused;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const LookupError& e) {
    std::cerr << "lookup error: " << e.what() << '\n';
    return kLookup;
  } catch (const ParameterError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kOther;
}
