#include "pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "chaintrace/agency/decentralized.hpp"
#include "chaintrace/csv.hpp"
#include "chaintrace/errors.hpp"

namespace chaintrace::cli {
namespace {

constexpr std::string_view kEvaluationHeader = "chain,verdict,edge_probabilities,overall,edge_evidence";

std::string exact(double value) {
  std::ostringstream out;
  out << std::setprecision(17) << value;
  return out.str();
}

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ParseError(key + " must be true or false", 0);
}

std::uint64_t count(const std::string& value, const std::string& key) {
  return static_cast<std::uint64_t>(csv::parse_count(value, 0, key));
}

Mode parse_mode(const std::string& value) {
  if (value == "forward") return Mode::Forward;
  if (value == "reverse") return Mode::Reverse;
  if (value == "bidir") return Mode::Bidirectional;
  if (value == "decentralized") return Mode::Decentralized;
  throw ParseError("unknown mode '" + value + "'", 0);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string join_doubles(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i != 0) out += '|';
    out += exact(values[i]);
  }
  return out;
}

std::string transcript_csv(const std::vector<agency::TranscriptEntry>& transcript) {
  std::ostringstream out;
  out << "kind,party,round,users\n";
  for (const auto& entry : transcript) {
    if (const auto* f = std::get_if<agency::FrontierMessage>(&entry)) {
      out << "frontier," << static_cast<int>(f->party) << ',' << f->round << ','
          << (f->username ? f->username->str() : "") << '\n';
    } else if (const auto* m = std::get_if<agency::MatchNotice>(&entry)) {
      out << "match,," << m->forward_round << ':' << m->reverse_round << ",\n";
    } else {
      const auto& p = std::get<agency::PartialChainMessage>(entry);
      out << "partial," << static_cast<int>(p.party) << ',' << p.round << ','
          << join_users(p.users) << '\n';
    }
  }
  return out.str();
}

}  // namespace

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  KeyValues values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) throw ParseError("expected key=value", line_no);
    values[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return values;
}

void apply(RunManifest& m, const KeyValues& values) {
  for (const auto& [key, value] : values) {
    try {
      if (key == "fixture") m.fixture = value;
      else if (key == "escrow") m.escrow = value.empty() ? std::nullopt : std::optional<std::filesystem::path>(value);
      else if (key == "seed") m.seed = count(value, key);
      else if (key == "m") m.m = count(value, key);
      else if (key == "k_min") m.k_min = static_cast<std::uint32_t>(count(value, key));
      else if (key == "k_max") m.k_max = static_cast<std::uint32_t>(count(value, key));
      else if (key == "hash") m.hash = value;
      else if (key == "from") m.from = value;
      else if (key == "to") m.to = value;
      else if (key == "t0") m.t0 = static_cast<Time>(count(value, key));
      else if (key == "horizon") m.horizon = value.empty() ? std::nullopt : std::optional<Time>(static_cast<Time>(count(value, key)));
      else if (key == "mode") m.mode = parse_mode(value);
      else if (key == "deterministic") m.deterministic = parse_bool(value, key);
      else if (key == "rule") {
        if (value == "ordered") m.rule = agency::TimeRule::Ordered;
        else if (value == "literal") m.rule = agency::TimeRule::Literal;
        else throw ParseError("rule must be ordered or literal", 0);
      } else if (key == "stop") {
        if (value == "first-common") m.stop = agency::StopRule::FirstCommonChain;
        else if (value == "exhaustive") m.stop = agency::StopRule::Exhaustive;
        else throw ParseError("stop must be first-common or exhaustive", 0);
      } else if (key == "prune") m.prune = parse_bool(value, key);
      else if (key == "max_depth") m.max_depth = value.empty() ? std::nullopt : std::optional<std::size_t>(count(value, key));
      else if (key == "tr") m.model.tr = csv::parse_double(value, 0, key);
      else if (key == "lambda") m.lambda = csv::parse_double(value, 0, key);
      else if (key == "reproduction_number") m.model.reproduction_number = csv::parse_double(value, 0, key);
      else if (key == "saturation") m.model.saturation = csv::parse_double(value, 0, key);
      else if (key == "contact_distance") m.model.contact_distance = csv::parse_double(value, 0, key);
      else if (key == "out") m.out = value;
      else throw ParseError("unknown key '" + key + "'", 0);
    } catch (const ParseError& e) {
      throw ParseError(std::string(e.what()) + " (key " + key + ")", 0);
    }
  }
}

const char* to_string(Mode mode) noexcept {
  switch (mode) {
    case Mode::Forward:
      return "forward";
    case Mode::Reverse:
      return "reverse";
    case Mode::Bidirectional:
      return "bidir";
    case Mode::Decentralized:
      return "decentralized";
  }
  return "?";
}

std::string to_text(const RunManifest& m) {
  std::ostringstream out;
  out << "fixture=" << m.fixture.string() << '\n';
  out << "escrow=" << (m.escrow ? m.escrow->string() : "") << '\n';
  out << "seed=" << m.seed << '\n';
  out << "m=" << m.m << '\n';
  out << "k_min=" << m.k_min << '\n';
  out << "k_max=" << m.k_max << '\n';
  out << "hash=" << m.hash << '\n';
  out << "from=" << m.from << '\n';
  out << "to=" << m.to << '\n';
  out << "t0=" << m.t0 << '\n';
  out << "horizon=" << (m.horizon ? std::to_string(*m.horizon) : "") << '\n';
  out << "mode=" << to_string(m.mode) << '\n';
  out << "deterministic=" << (m.deterministic ? "true" : "false") << '\n';
  out << "rule=" << (m.rule == agency::TimeRule::Ordered ? "ordered" : "literal") << '\n';
  out << "stop=" << (m.stop == agency::StopRule::FirstCommonChain ? "first-common" : "exhaustive")
      << '\n';
  out << "prune=" << (m.prune ? "true" : "false") << '\n';
  out << "max_depth=" << (m.max_depth ? std::to_string(*m.max_depth) : "") << '\n';
  out << "tr=" << exact(m.model.tr) << '\n';
  out << "lambda=" << exact(m.lambda) << '\n';
  out << "reproduction_number=" << exact(m.model.reproduction_number) << '\n';
  out << "saturation=" << exact(m.model.saturation) << '\n';
  out << "contact_distance=" << exact(m.model.contact_distance) << '\n';
  out << "out=" << m.out.string() << '\n';
  return out.str();
}

std::unique_ptr<telco::Telco> make_telco(const RunManifest& manifest,
                                         std::optional<std::filesystem::path> audit_path) {
  auto logs = load_logs(manifest.fixture);
  auto escrow = manifest.escrow ? telco::load_escrow(*manifest.escrow) : telco::synthetic_escrow(logs);
  Rng rng(manifest.seed);
  auto state = telco::make_state(std::move(logs), std::move(escrow), manifest.m,
                                 {manifest.k_min, manifest.k_max}, rng, manifest.hash);
  return std::make_unique<telco::Telco>(std::move(state), manifest.fixture.stem().string(),
                                        std::move(audit_path));
}

Time effective_horizon(const RunManifest& manifest, const std::vector<BaseStationLog>& logs) {
  if (manifest.horizon) return *manifest.horizon;
  Time latest = 24;
  for (const auto& log : logs) {
    for (const auto& r : log.records) latest = std::max(latest, r.interval.end());
  }
  return latest;
}

TraceOutcome run_trace(const RunManifest& manifest, const telco::Telco& oracle, bool write) {
  const auto& logs = oracle.state().logs;
  // Subscribers are the escrow's users; one without records has no contact data.
  for (const auto* name : {&manifest.from, &manifest.to}) {
    if (name->empty()) throw ParameterError("--from and --to are required");
    if (oracle.state().escrow.count(Username(*name)) == 0) {
      throw LookupError("unknown user '" + *name + "'");
    }
  }
  epi::validate(manifest.model);
  auto model = std::make_shared<epi::ExponentialModel>(manifest.lambda);

  agency::SearchConfig cfg{Username(manifest.from), Username(manifest.to)};
  cfg.t0 = manifest.t0;
  cfg.horizon = effective_horizon(manifest, logs);
  cfg.max_depth = manifest.max_depth;
  cfg.prune_with_infection = manifest.prune;
  cfg.model_params = manifest.model;
  cfg.model = model;
  cfg.rule = manifest.rule;
  cfg.stop = manifest.stop;

  const FilterCatalog catalog = oracle.catalog();
  std::vector<agency::ChainRow> rows;
  std::ostringstream dot;
  std::ostringstream rounds;
  std::optional<std::string> transcript;
  TraceOutcome outcome;

  switch (manifest.mode) {
    case Mode::Forward: {
      const auto tree = agency::prox_tree(oracle, catalog, cfg);
      rows = agency::chain_rows(tree, cfg.endpoint_b);
      agency::write_dot(dot, tree, "forward");
      agency::write_rounds(rounds, tree, cfg.endpoint_b);
      outcome.no_contact_data = tree.no_contact_data;
      break;
    }
    case Mode::Reverse: {
      const auto tree = agency::reverse_prox_tree(oracle, catalog, cfg);
      rows = agency::chain_rows(tree, cfg.endpoint_a);
      agency::write_dot(dot, tree, "reverse");
      agency::write_rounds(rounds, tree, cfg.endpoint_a);
      outcome.no_contact_data = tree.no_contact_data;
      break;
    }
    case Mode::Bidirectional:
    case Mode::Decentralized: {
      agency::BidirectionalResult result;
      if (manifest.mode == Mode::Bidirectional) {
        result = agency::bidirectional_search(oracle, catalog, cfg);
      } else {
        auto run = agency::decentralized_bidirectional(
            oracle, catalog, cfg,
            manifest.deterministic ? agency::Scheduling::Interleaved : agency::Scheduling::Threaded);
        result = std::move(run.result);
        transcript = transcript_csv(run.transcript);
      }
      rows = agency::chain_rows(result.chains);
      agency::write_dot(dot, result.forward_tree, "forward");
      agency::write_dot(dot, result.reverse_tree, "reverse");
      agency::write_rounds(rounds, result.report);
      outcome.no_contact_data = result.forward_tree.no_contact_data || result.reverse_tree.no_contact_data;
      break;
    }
  }

  for (const auto& row : rows) {
    EvaluatedChain e{row.chain, row.round, "", {}, 1.0};
    for (const auto& edge : epi::edge_probabilities(row.chain, manifest.model, *model)) {
      e.edge_probabilities.push_back(edge.p);
      e.overall *= edge.p;
    }
    if (chain_violation(row.chain)) {
      e.verdict = "unordered";
    } else {
      const auto verdict = epi::evaluate_chain(row.chain, manifest.model, *model);
      e.verdict = std::holds_alternative<InfectionChain>(verdict) ? "infection" : "proximity-only";
    }
    outcome.chains.push_back(std::move(e));
  }

  if (write) {
    std::filesystem::create_directories(manifest.out);
    std::ostringstream chains;
    agency::write_chain_report(chains, rows);
    std::ostringstream evaluation;
    evaluation << kEvaluationHeader << '\n';
    for (const auto& e : outcome.chains) {
      evaluation << join_users(e.chain.users) << ',' << e.verdict << ','
                 << join_doubles(e.edge_probabilities) << ',' << exact(e.overall) << ','
                 << agency::format_evidence(e.chain) << '\n';
    }
    write_file(manifest.out / "chains.csv", chains.str());
    write_file(manifest.out / "evaluation.csv", evaluation.str());
    write_file(manifest.out / "tree.dot", dot.str());
    write_file(manifest.out / "rounds.csv", rounds.str());
    write_file(manifest.out / "manifest.txt", to_text(manifest));
    if (transcript) write_file(manifest.out / "transcript.csv", *transcript);
  }
  return outcome;
}

std::vector<std::pair<std::string, InfectionChain>> read_evaluation(
    const std::filesystem::path& evaluation, double tr) {
  std::ifstream in(evaluation);
  if (!in) throw IoError("cannot open " + evaluation.string());
  csv::expect_header(in, kEvaluationHeader);
  std::vector<std::pair<std::string, InfectionChain>> out;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = csv::split(line);
    if (fields.size() != 5) throw ParseError("expected 5 fields", line_no);
    InfectionChain chain{agency::parse_chain(fields[0], fields[4]), {}, 0.0, tr};
    for (const auto& p : csv::split(fields[2], '|')) {
      if (!p.empty()) chain.edge_probabilities.push_back(csv::parse_double(p, line_no, "probability"));
    }
    chain.overall = csv::parse_double(fields[3], line_no, "overall");
    out.emplace_back(fields[1], std::move(chain));
  }
  return out;
}

std::vector<InfectionChain> read_confirmed(const std::filesystem::path& evaluation, double tr) {
  std::vector<InfectionChain> out;
  for (auto& [verdict, chain] : read_evaluation(evaluation, tr)) {
    if (verdict == "infection") out.push_back(std::move(chain));
  }
  return out;
}

}  // namespace chaintrace::cli
