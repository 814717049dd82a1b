#pragma once

// Infection evaluation of proximity chains and re-seeding of the endpoint
// work queue once new infected users are confirmed.

#include <memory>
#include <set>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "chaintrace/logmodel/types.hpp"

namespace chaintrace::epi {

struct InfectionModelParams {
  double tr = 0.5;
  double reproduction_number = 1.0;
  double saturation = 0.0;
  double contact_distance = 1.0;
};

/// Throws ParameterError unless 0 < tr < 1, R >= 0, 0 <= saturation <= 1 and
/// contact_distance >= 0.
void validate(const InfectionModelParams& params);

/// Transmission probability of one contact. Implementations must return a
/// value in [0, 1].
class InfectionModel {
 public:
  virtual ~InfectionModel() = default;
  virtual double infection(const Username& previous_node, double contact_time,
                           double contact_distance, double reproduction_number,
                           double saturation) const = 0;
};

/// (1 - exp(-lambda * t)) * min(1, R) * (1 - saturation). A placeholder, not
/// an epidemiological claim. previous_node and distance are ignored.
class ExponentialModel final : public InfectionModel {
 public:
  explicit ExponentialModel(double lambda = 0.1);
  double lambda() const noexcept { return lambda_; }
  double infection(const Username& previous_node, double contact_time, double contact_distance,
                   double reproduction_number, double saturation) const override;

 private:
  double lambda_;
};

/// Throws ParameterError for negative contact_time or a model result outside
/// [0, 1].
double infection_probability(const InfectionModel& model, const Username& previous_node,
                             double contact_time, const InfectionModelParams& params);

struct EdgeProbability {
  Username from;
  Username to;
  double p = 0.0;
};

/// One probability per chain edge; contact time is the overlap length.
std::vector<EdgeProbability> edge_probabilities(const ProximityChain& chain,
                                                const InfectionModelParams& params,
                                                const InfectionModel& model);

struct ProximityOnly {
  ProximityChain chain;
  std::vector<EdgeProbability> edges;
  std::vector<std::size_t> failing_edges;
};

using ChainVerdict = std::variant<InfectionChain, ProximityOnly>;

/// A two-user chain joins two confirmed cases and is always promoted. Longer
/// chains are promoted iff every edge probability is strictly above tr.
ChainVerdict evaluate_chain(const ProximityChain& chain, const InfectionModelParams& params,
                            const InfectionModel& model);

/// Maximal runs of consecutive passing edges, each as an InfectionChain.
std::vector<InfectionChain> evaluate_subchains(const ProximityChain& chain,
                                               const InfectionModelParams& params,
                                               const InfectionModel& model);

/// Whether a partial search path (in A-to-B orientation) may still grow into
/// an infection chain. A single edge reaching `target` is the direct chain
/// and always survives.
bool prune_predicate(const ProximityChain& partial, const Username& target,
                     const InfectionModelParams& params, const InfectionModel& model);

/// (source, target) endpoint pair of one search.
using UserPair = std::pair<Username, Username>;

/// Next work queue. The infected set is every user of a confirmed chain in
/// first-appearance order, followed by endpoints of known pairs. Emits each
/// unordered pair (u_i, u_j), i < j, not yet processed in either direction,
/// then the swapped direction of each processed endpoint pair unless it was
/// processed too or `ordered` says the original direction is the true one.
std::vector<UserPair> reseed(std::span<const InfectionChain> confirmed,
                             const std::set<UserPair>& known_pairs,
                             const std::set<UserPair>& ordered = {});

}  // namespace chaintrace::epi
