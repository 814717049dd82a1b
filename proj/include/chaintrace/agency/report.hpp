#pragma once

// Text artifacts of a search: DOT trees and CSV chain/round reports.

#include <iosfwd>
#include <string>
#include <vector>

#include "chaintrace/agency/search.hpp"

namespace chaintrace::agency {

/// "idx@t1:t2/t1:t2", from side first.
std::string format_evidence(const ContactEvidence& contact);
/// Evidence of every edge joined by '|'.
std::string format_evidence(const ProximityChain& chain);
ProximityChain parse_chain(const std::string& users, const std::string& evidence);

/// Node label "user (round)", edge label the evidence in tree orientation.
void write_dot(std::ostream& out, const ProximityTree& tree, const std::string& name = "tree");

struct ChainRow {
  ProximityChain chain;
  std::size_t round = 0;
};

/// `chain,length,rounds_found,edge_evidence`; length counts users.
void write_chain_report(std::ostream& out, const std::vector<ChainRow>& rows);
std::vector<ChainRow> read_chain_report(std::istream& in);

/// Rows for a unidirectional tree: each chain with the round of its leaf.
std::vector<ChainRow> chain_rows(const ProximityTree& tree, const Username& target);
std::vector<ChainRow> chain_rows(const std::vector<FoundChain>& found);

/// `round,forward,reverse,found` where found lists "A;C;B@source" joined by '|'.
void write_rounds(std::ostream& out, const MeetReport& report);
/// Rounds of a single tree, reverse column left empty for forward trees and
/// vice versa.
void write_rounds(std::ostream& out, const ProximityTree& tree, const Username& target);

}  // namespace chaintrace::agency
