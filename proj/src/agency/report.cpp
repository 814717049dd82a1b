#include "chaintrace/agency/report.hpp"

#include <istream>
#include <ostream>

#include "chaintrace/csv.hpp"
#include "chaintrace/errors.hpp"

namespace chaintrace::agency {
namespace {

constexpr std::string_view kChainHeader = "chain,length,rounds_found,edge_evidence";

std::string span_text(const TimeInterval& t) {
  return std::to_string(t.start()) + ":" + std::to_string(t.end());
}

TimeInterval parse_span(std::string_view text, std::size_t line) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw ParseError("interval needs t1:t2", line);
  const Time t1 = csv::parse_count(text.substr(0, colon), line, "t1");
  const Time t2 = csv::parse_count(text.substr(colon + 1), line, "t2");
  if (t1 > t2) throw ParseError("interval start after end", line);
  return {t1, t2};
}

ContactEvidence parse_contact(std::string_view text, std::size_t line) {
  const auto at = text.find('@');
  const auto slash = text.find('/');
  if (at == std::string_view::npos || slash == std::string_view::npos || slash < at) {
    throw ParseError("evidence needs idx@t1:t2/t1:t2", line);
  }
  const auto index = static_cast<std::size_t>(csv::parse_count(text.substr(0, at), line, "index"));
  return {index, parse_span(text.substr(at + 1, slash - at - 1), line),
          parse_span(text.substr(slash + 1), line)};
}

ProximityChain parse_chain_at(const std::string& users, const std::string& evidence,
                              std::size_t line) {
  ProximityChain chain;
  try {
    chain.users = split_users(users);
  } catch (const EncodingError& e) {
    throw ParseError(e.what(), line);
  }
  if (!evidence.empty()) {
    for (const auto& part : csv::split(evidence, '|')) chain.contacts.push_back(parse_contact(part, line));
  }
  if (chain.users.size() < 2 || chain.contacts.size() + 1 != chain.users.size()) {
    throw ParseError("chain needs one evidence item per edge", line);
  }
  return chain;
}

std::string found_text(const std::vector<FoundChain>& found) {
  std::string out;
  for (std::size_t i = 0; i < found.size(); ++i) {
    if (i != 0) out += '|';
    out += join_users(found[i].chain.users);
    out += '@';
    out += to_string(found[i].source);
  }
  return out;
}

}  // namespace

std::string format_evidence(const ContactEvidence& contact) {
  return std::to_string(contact.filter_index) + "@" + span_text(contact.from) + "/" +
         span_text(contact.to);
}

std::string format_evidence(const ProximityChain& chain) {
  std::string out;
  for (std::size_t i = 0; i < chain.contacts.size(); ++i) {
    if (i != 0) out += '|';
    out += format_evidence(chain.contacts[i]);
  }
  return out;
}

ProximityChain parse_chain(const std::string& users, const std::string& evidence) {
  return parse_chain_at(users, evidence, 0);
}

void write_dot(std::ostream& out, const ProximityTree& tree, const std::string& name) {
  out << "digraph " << name << " {\n";
  out << "  rankdir=TB;\n";
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& n = tree.nodes[i];
    out << "  n" << i << " [label=\"" << n.user.str();
    if (n.parent) out << " (" << n.round_created << ")";
    out << "\"];\n";
  }
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& n = tree.nodes[i];
    if (!n.parent) continue;
    out << "  n" << *n.parent << " -> n" << i << " [label=\"" << format_evidence(*n.contact)
        << "\"];\n";
  }
  out << "}\n";
}

void write_chain_report(std::ostream& out, const std::vector<ChainRow>& rows) {
  out << kChainHeader << '\n';
  for (const auto& row : rows) {
    out << join_users(row.chain.users) << ',' << row.chain.users.size() << ',' << row.round << ','
        << format_evidence(row.chain) << '\n';
  }
}

std::vector<ChainRow> read_chain_report(std::istream& in) {
  csv::expect_header(in, kChainHeader);
  std::vector<ChainRow> rows;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = csv::split(line);
    if (fields.size() != 4) throw ParseError("expected 4 fields", line_no);
    ChainRow row{parse_chain_at(fields[0], fields[3], line_no),
                 static_cast<std::size_t>(csv::parse_count(fields[2], line_no, "rounds_found"))};
    if (static_cast<std::size_t>(csv::parse_count(fields[1], line_no, "length")) !=
        row.chain.users.size()) {
      throw ParseError("length does not match the chain", line_no);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<ChainRow> chain_rows(const ProximityTree& tree, const Username& target) {
  std::vector<ChainRow> rows;
  for (std::size_t id : tree.rounds) {
    if (tree.nodes[id].user == target) {
      rows.push_back({canonical_path(tree, id), tree.nodes[id].round_created});
    }
  }
  return rows;
}

std::vector<ChainRow> chain_rows(const std::vector<FoundChain>& found) {
  std::vector<ChainRow> rows;
  for (const auto& f : found) rows.push_back({f.chain, f.round});
  return rows;
}

void write_rounds(std::ostream& out, const MeetReport& report) {
  out << "round,forward,reverse,found\n";
  for (const auto& r : report.rounds) {
    out << r.round << ',' << (r.forward ? r.forward->str() : "") << ','
        << (r.reverse ? r.reverse->str() : "") << ',' << found_text(r.found) << '\n';
  }
}

void write_rounds(std::ostream& out, const ProximityTree& tree, const Username& target) {
  const bool forward = tree.direction == Direction::Forward;
  const ChainSource source = forward ? ChainSource::Forward : ChainSource::Reverse;
  out << "round,forward,reverse,found\n";
  for (std::size_t id : tree.rounds) {
    const auto& n = tree.nodes[id];
    std::vector<FoundChain> found;
    if (n.user == target) found.push_back({canonical_path(tree, id), n.round_created, source});
    out << n.round_created << ',' << (forward ? n.user.str() : "") << ','
        << (forward ? "" : n.user.str()) << ',' << found_text(found) << '\n';
  }
}

}  // namespace chaintrace::agency
