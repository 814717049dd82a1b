#include "chaintrace/epi.hpp"

#include <algorithm>
#include <cmath>

#include "chaintrace/errors.hpp"

namespace chaintrace::epi {

void validate(const InfectionModelParams& params) {
  if (!(params.tr > 0.0 && params.tr < 1.0)) throw ParameterError("tr must lie in (0, 1)");
  if (!(params.reproduction_number >= 0.0)) throw ParameterError("reproduction_number must be >= 0");
  if (!(params.saturation >= 0.0 && params.saturation <= 1.0)) {
    throw ParameterError("saturation must lie in [0, 1]");
  }
  if (!(params.contact_distance >= 0.0)) throw ParameterError("contact_distance must be >= 0");
}

ExponentialModel::ExponentialModel(double lambda) : lambda_(lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ParameterError("lambda must be positive");
}

double ExponentialModel::infection(const Username&, double contact_time, double,
                                   double reproduction_number, double saturation) const {
  const double exposure = -std::expm1(-lambda_ * contact_time);
  return std::clamp(exposure * std::min(1.0, reproduction_number) * (1.0 - saturation), 0.0, 1.0);
}

double infection_probability(const InfectionModel& model, const Username& previous_node,
                             double contact_time, const InfectionModelParams& params) {
  if (!(contact_time >= 0.0)) throw ParameterError("contact_time must be non-negative");
  const double p = model.infection(previous_node, contact_time, params.contact_distance,
                                   params.reproduction_number, params.saturation);
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("infection model returned a non-probability");
  return p;
}

std::vector<EdgeProbability> edge_probabilities(const ProximityChain& chain,
                                                const InfectionModelParams& params,
                                                const InfectionModel& model) {
  std::vector<EdgeProbability> out;
  out.reserve(chain.contacts.size());
  for (std::size_t i = 0; i < chain.contacts.size(); ++i) {
    const auto t = static_cast<double>(chain.contacts[i].overlap().length());
    out.push_back({chain.users[i], chain.users[i + 1],
                   infection_probability(model, chain.users[i], t, params)});
  }
  return out;
}

namespace {

InfectionChain promote(ProximityChain chain, const std::vector<EdgeProbability>& edges,
                       double tr) {
  InfectionChain out{std::move(chain), {}, 1.0, tr};
  for (const auto& e : edges) {
    out.edge_probabilities.push_back(e.p);
    out.overall *= e.p;
  }
  return out;
}

}  // namespace

ChainVerdict evaluate_chain(const ProximityChain& chain, const InfectionModelParams& params,
                            const InfectionModel& model) {
  validate_chain(chain);
  auto edges = edge_probabilities(chain, params, model);
  if (chain.users.size() == 2) return promote(chain, edges, params.tr);
  std::vector<std::size_t> failing;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!(edges[i].p > params.tr)) failing.push_back(i);
  }
  if (failing.empty()) return promote(chain, edges, params.tr);
  return ProximityOnly{chain, std::move(edges), std::move(failing)};
}

std::vector<InfectionChain> evaluate_subchains(const ProximityChain& chain,
                                               const InfectionModelParams& params,
                                               const InfectionModel& model) {
  auto verdict = evaluate_chain(chain, params, model);
  if (auto* whole = std::get_if<InfectionChain>(&verdict)) return {*whole};

  const auto& all = std::get<ProximityOnly>(verdict).edges;
  std::vector<InfectionChain> out;
  std::size_t i = 0;
  while (i < all.size()) {
    if (!(all[i].p > params.tr)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < all.size() && all[j].p > params.tr) ++j;
    ProximityChain sub;
    sub.users.assign(chain.users.begin() + static_cast<std::ptrdiff_t>(i),
                     chain.users.begin() + static_cast<std::ptrdiff_t>(j + 1));
    sub.contacts.assign(chain.contacts.begin() + static_cast<std::ptrdiff_t>(i),
                        chain.contacts.begin() + static_cast<std::ptrdiff_t>(j));
    out.push_back(promote(std::move(sub),
                          {all.begin() + static_cast<std::ptrdiff_t>(i),
                           all.begin() + static_cast<std::ptrdiff_t>(j)},
                          params.tr));
    i = j;
  }
  return out;
}

bool prune_predicate(const ProximityChain& partial, const Username& target,
                     const InfectionModelParams& params, const InfectionModel& model) {
  if (partial.contacts.empty()) throw PreconditionError("partial path needs at least one edge");
  if (partial.contacts.size() == 1 && partial.users.size() == 2 &&
      (partial.users.front() == target || partial.users.back() == target)) {
    return true;
  }
  for (const auto& e : edge_probabilities(partial, params, model)) {
    if (!(e.p > params.tr)) return false;
  }
  return true;
}

std::vector<UserPair> reseed(std::span<const InfectionChain> confirmed,
                             const std::set<UserPair>& known_pairs,
                             const std::set<UserPair>& ordered) {
  if (confirmed.empty()) return {};
  std::vector<Username> infected;
  std::set<Username> seen;
  auto add = [&](const Username& u) {
    if (seen.insert(u).second) infected.push_back(u);
  };
  for (const auto& c : confirmed) {
    for (const auto& u : c.chain.users) add(u);
  }
  for (const auto& [a, b] : known_pairs) {
    add(a);
    add(b);
  }

  auto processed = [&](const Username& a, const Username& b) {
    return known_pairs.count({a, b}) != 0 || known_pairs.count({b, a}) != 0;
  };
  std::vector<UserPair> out;
  for (std::size_t i = 0; i < infected.size(); ++i) {
    for (std::size_t j = i + 1; j < infected.size(); ++j) {
      if (!processed(infected[i], infected[j])) out.emplace_back(infected[i], infected[j]);
    }
  }

  std::set<UserPair> swapped;
  for (const auto& c : confirmed) {
    const UserPair ends{c.chain.users.front(), c.chain.users.back()};
    if (known_pairs.count(ends) == 0) continue;
    const UserPair swap{ends.second, ends.first};
    if (known_pairs.count(swap) != 0 || ordered.count(ends) != 0) continue;
    if (swapped.insert(swap).second) out.push_back(swap);
  }
  return out;
}

}  // namespace chaintrace::epi
