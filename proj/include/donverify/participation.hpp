#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <variant>
#include <vector>

#include "donverify/money.hpp"
#include "donverify/tree.hpp"

namespace donverify {

/// A donor who gave s verifies with probability 1 - exp(-lambda * s).
struct ExponentialModel {
    double lambda = 0.0;
};

/// Every donor verifies with the same probability.
struct UniformModel {
    double delta = 0.0;
};

/// Piecewise-constant participation over the amount intervals [b_j, b_{j+1}).
struct RegionalModel {
    std::vector<Money> boundaries;
    std::vector<double> probs;  // one per interval
};

using ParticipationModel = std::variant<ExponentialModel, UniformModel, RegionalModel>;

/// Throws std::invalid_argument when the model's parameters are out of domain.
void validate_model(const ParticipationModel& model);

/// Probability that a donor of `amount` verifies. Non-positive amounts never
/// verify under the exponential model.
double participation_prob(const ParticipationModel& model, Money amount);

/// 1 - participation_prob, computed without cancellation for small rates.
double abstention_prob(const ParticipationModel& model, Money amount);

/// Draws each donor independently from a substream keyed by (seed, donor id),
/// so the result does not depend on input order or on how the work is split.
std::set<DonorId> sample_verifiers(const ParticipationModel& model, std::span<const DonorRecord> donors,
                                   std::uint64_t seed);

/// The single uniform draw deciding whether `donor` verifies under `seed`.
double verifier_draw(std::uint64_t seed, std::string_view donor);

/// Geometric amount partition [a0, a] with boundaries growing by at most (1 + ratio).
struct RegionPartition {
    Money a0;
    Money a;
    double ratio = 0.0;
    std::vector<Money> boundaries;

    [[nodiscard]] std::size_t interval_count() const { return boundaries.size() - 1; }
};

/// Boundaries a_{j+1} = min(a, floor(a_j * (1 + ratio))). Requires a0 * ratio >= 1
/// so each step gains at least one minor unit while honoring the growth bound.
RegionPartition make_partition(Money a0, Money a, double ratio);

/// Total amount given by the donors of each interval.
std::vector<Money> region_masses(std::span<const Money> boundaries, std::span<const DonorRecord> donors);

}  // namespace donverify
