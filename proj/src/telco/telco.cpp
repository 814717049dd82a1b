#include "chaintrace/telco.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

#include "chaintrace/csv.hpp"
#include "chaintrace/errors.hpp"

namespace chaintrace::telco {
namespace {

constexpr std::string_view kEscrowHeader = "user,identity";
constexpr std::string_view kAuditHeader = "seq,chain,decision";

kbloom::Bytes tuple_bytes(const Username& user, const TimeInterval& interval) {
  const auto text = encode_tuple(user, interval);
  return {text.begin(), text.end()};
}

std::string sanitize(std::string_view text) {
  std::string out;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    out += (c == ',' || c == '"' || u < 0x20) ? ' ' : c;
  }
  return out;
}

}  // namespace

std::map<Username, std::string> parse_escrow(std::istream& in) {
  csv::expect_header(in, kEscrowHeader);
  std::map<Username, std::string> escrow;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
    const auto fields = csv::split(line);
    if (fields.size() != 2) throw ParseError("expected 2 fields", line_no);
    if (fields[1].empty()) throw ParseError("empty identity", line_no);
    try {
      if (!escrow.emplace(Username(fields[0]), fields[1]).second) {
        throw ParseError("duplicate user " + fields[0], line_no);
      }
    } catch (const EncodingError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return escrow;
}

std::map<Username, std::string> load_escrow(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_escrow(in);
}

void write_escrow(std::ostream& out, const std::map<Username, std::string>& escrow) {
  out << kEscrowHeader << '\n';
  for (const auto& [user, identity] : escrow) out << user.str() << ',' << identity << '\n';
}

void save_escrow(const std::map<Username, std::string>& escrow, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_escrow(out, escrow);
  if (!out) throw IoError("failed writing " + path.string());
}

std::map<Username, std::string> synthetic_escrow(const std::vector<BaseStationLog>& logs) {
  std::map<Username, std::string> escrow;
  for (const auto& u : usernames(logs)) escrow.emplace(u, "Person " + u.str());
  return escrow;
}

AuditLog::AuditLog(std::optional<std::filesystem::path> path) : path_(std::move(path)) {
  if (!path_) return;
  std::ifstream in(*path_);
  if (!in) return;
  std::string line;
  if (!std::getline(in, line)) return;
  if (line != kAuditHeader) throw ParseError("unknown audit header '" + line + "'", 1);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = csv::split(line);
    if (fields.size() != 3) throw ParseError("expected 3 fields", line_no);
    const auto seq = static_cast<std::size_t>(csv::parse_count(fields[0], line_no, "seq"));
    entries_.push_back({seq, fields[1], fields[2]});
    next_seq_ = std::max(next_seq_, seq + 1);
  }
}

AuditEntry AuditLog::append(const std::string& chain, const std::string& decision) {
  std::lock_guard lock(mutex_);
  AuditEntry entry{next_seq_++, sanitize(chain), sanitize(decision)};
  if (path_) {
    const bool fresh = !std::filesystem::exists(*path_) || std::filesystem::file_size(*path_) == 0;
    std::ofstream out(*path_, std::ios::binary | std::ios::app);
    if (!out) throw IoError("cannot open " + path_->string() + " for appending");
    if (fresh) out << kAuditHeader << '\n';
    out << entry.seq << ',' << entry.chain << ',' << entry.decision << '\n';
    if (!out) throw IoError("failed writing " + path_->string());
  }
  entries_.push_back(entry);
  return entry;
}

std::vector<AuditEntry> AuditLog::entries() const {
  std::lock_guard lock(mutex_);
  return entries_;
}

void check_state(const TelcoState& state) {
  if (state.keys.size() != state.params.secret_key_count()) {
    throw ParameterError("key set size does not match k");
  }
  std::set<std::string> tokens;
  for (const auto& log : state.logs) {
    if (!tokens.insert(log.station_token).second) {
      throw IntegrityError("duplicate station token " + log.station_token);
    }
  }
  std::vector<std::size_t> sorted = state.station_shuffle;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> identity(state.logs.size());
  std::iota(identity.begin(), identity.end(), std::size_t{0});
  if (sorted != identity) throw IntegrityError("station shuffle is not a permutation");
  for (const auto& user : usernames(state.logs)) {
    if (state.escrow.count(user) == 0) throw IntegrityError("escrow has no identity for " + user.str());
  }
}

TelcoState make_state(std::vector<BaseStationLog> logs, std::map<Username, std::string> escrow,
                      std::size_t m, kbloom::KeyBounds bounds, Rng& rng,
                      std::string_view hash_name) {
  auto fs = kbloom::setup(m, bounds, rng, hash_name);
  std::vector<std::size_t> shuffle(logs.size());
  std::iota(shuffle.begin(), shuffle.end(), std::size_t{0});
  rng.shuffle(shuffle);
  TelcoState state{std::move(fs.params), std::move(fs.keys), std::move(logs), std::move(escrow),
                   std::move(shuffle)};
  check_state(state);
  return state;
}

FilterCatalog build_catalog(const TelcoState& state, std::string catalog_id) {
  FilterCatalog catalog{{}, std::move(catalog_id)};
  for (std::size_t station : state.station_shuffle) {
    std::vector<kbloom::Bytes> elements;
    for (const auto& r : state.logs.at(station).records) {
      elements.push_back(tuple_bytes(r.user, r.interval));
    }
    catalog.station_filters.push_back(kbloom::create(state.params, state.keys, elements));
  }
  return catalog;
}

kbloom::KeyedBloomFilter request_tuple_filter(const TelcoState& state, const Username& user,
                                              const TimeInterval& interval) {
  const kbloom::Bytes element = tuple_bytes(user, interval);
  return kbloom::create(state.params, state.keys, std::span<const kbloom::Bytes>(&element, 1));
}

Telco::Telco(TelcoState state, std::string catalog_id,
             std::optional<std::filesystem::path> audit_path)
    : state_(std::move(state)),
      audit_(std::move(audit_path)) {
  check_state(state_);
  catalog_ = build_catalog(state_, std::move(catalog_id));
  for (const auto& log : state_.logs) {
    for (const auto& r : log.records) {
      TupleLabel label{r.user, r.interval};
      if (singletons_.count(label) == 0) {
        singletons_.emplace(label, telco::request_tuple_filter(state_, r.user, r.interval));
      }
    }
  }
}

kbloom::PublicFilterParams Telco::public_params() const { return state_.params.public_part(); }

kbloom::KeyedBloomFilter Telco::request_tuple_filter(const Username& user,
                                                     const TimeInterval& interval) const {
  const auto it = singletons_.find(TupleLabel{user, interval});
  if (it != singletons_.end()) return it->second;
  return telco::request_tuple_filter(state_, user, interval);
}

std::vector<LabeledFilter> Telco::request_own_tuples(const Username& user,
                                                     const TimeInterval& window) const {
  std::vector<LabeledFilter> out;
  for (const auto& [label, filter] : singletons_) {
    if (label.user == user && intervals_overlap(label.interval, window)) {
      out.push_back({label, filter});
    }
  }
  return out;
}

std::vector<CandidateFilter> Telco::request_candidate_filters(
    std::span<const CandidateQuery> queries) const {
  std::vector<CandidateFilter> out;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    for (const auto& [label, filter] : singletons_) {
      if (label.user != queries[q].about && intervals_overlap(label.interval, queries[q].window)) {
        out.push_back({q, {label, filter}});
      }
    }
  }
  return out;
}

IdentityMap Telco::reveal_identities(const InfectionChain& chain, std::string_view note) {
  const std::string users = join_users(chain.chain.users);
  const std::string suffix = note.empty() ? "" : " " + std::string(note);
  if (auto why = infection_violation(chain)) {
    audit_.append(users, "refused (" + *why + ")" + suffix);
    throw PolicyRefusal("not an infection chain: " + *why);
  }
  IdentityMap out;
  for (const auto& user : chain.chain.users) {
    const auto it = state_.escrow.find(user);
    if (it == state_.escrow.end()) {
      audit_.append(users, "integrity-error (no identity for " + user.str() + ")" + suffix);
      throw IntegrityError("escrow has no identity for " + user.str());
    }
    out.emplace(user, it->second);
  }
  audit_.append(users, "released" + suffix);
  return out;
}

}  // namespace chaintrace::telco
