#include "donverify/participation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "donverify/regions.hpp"
#include "donverify/rng.hpp"

namespace donverify {

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

void check_boundaries(std::span<const Money> b) {
    if (b.size() < 2) throw std::invalid_argument("regional model needs at least two boundaries");
    if (b.size() == 2 && b[0] == b[1]) return;  // single point interval
    for (std::size_t i = 1; i < b.size(); ++i) {
        if (!(b[i - 1] < b[i])) throw std::invalid_argument("region boundaries must be strictly ascending");
    }
}

std::size_t region_or_throw(const RegionalModel& m, Money amount) {
    auto region = find_region(m.boundaries, amount);
    if (!region) {
        throw std::out_of_range("amount " + std::to_string(amount.minor()) + " lies outside the regional model range");
    }
    return *region;
}

}  // namespace

void validate_model(const ParticipationModel& model) {
    std::visit(
        [](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, ExponentialModel>) {
                if (!(m.lambda >= 0.0) || !std::isfinite(m.lambda)) {
                    throw std::invalid_argument("exponential lambda must be finite and >= 0");
                }
            } else if constexpr (std::is_same_v<T, UniformModel>) {
                if (!is_probability(m.delta)) throw std::invalid_argument("uniform delta must lie in [0, 1]");
            } else {
                check_boundaries(m.boundaries);
                if (m.probs.size() != m.boundaries.size() - 1) {
                    throw std::invalid_argument("regional model needs one probability per interval");
                }
                for (double p : m.probs) {
                    if (!is_probability(p)) throw std::invalid_argument("regional probabilities must lie in [0, 1]");
                }
            }
        },
        model);
}

double participation_prob(const ParticipationModel& model, Money amount) {
    return std::visit(
        [&](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, ExponentialModel>) {
                if (amount <= Money{0}) return 0.0;
                return -std::expm1(-m.lambda * amount.to_double());
            } else if constexpr (std::is_same_v<T, UniformModel>) {
                return m.delta;
            } else {
                return m.probs.at(region_or_throw(m, amount));
            }
        },
        model);
}

double abstention_prob(const ParticipationModel& model, Money amount) {
    return std::visit(
        [&](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, ExponentialModel>) {
                if (amount <= Money{0}) return 1.0;
                return std::exp(-m.lambda * amount.to_double());
            } else if constexpr (std::is_same_v<T, UniformModel>) {
                return 1.0 - m.delta;
            } else {
                return 1.0 - m.probs.at(region_or_throw(m, amount));
            }
        },
        model);
}

double verifier_draw(std::uint64_t seed, std::string_view donor) {
    return unit_interval(derive_seed(seed, fnv1a64(donor)));
}

std::set<DonorId> sample_verifiers(const ParticipationModel& model, std::span<const DonorRecord> donors,
                                   std::uint64_t seed) {
    std::set<DonorId> out;
    for (const auto& d : donors) {
        if (verifier_draw(seed, d.id) < participation_prob(model, d.amount)) out.insert(d.id);
    }
    return out;
}

RegionPartition make_partition(Money a0, Money a, double ratio) {
    if (!(Money{0} < a0) || a < a0) throw std::invalid_argument("partition needs 0 < a0 <= a");
    if (!(ratio > 0.0) || !std::isfinite(ratio)) throw std::invalid_argument("partition ratio must be positive");
    RegionPartition part{a0, a, ratio, {a0}};
    if (a == a0) {
        part.boundaries.push_back(a);
        return part;
    }
    if (a0.to_double() * ratio < 1.0) {
        throw std::invalid_argument("a0 * ratio must be at least 1 minor unit so boundaries can grow");
    }
    Money current = a0;
    while (current < a) {
        const long double grown = static_cast<long double>(current.minor()) * (1.0L + ratio);
        Money next = grown >= static_cast<long double>(a.minor()) ? a : Money{static_cast<Money::rep>(std::floor(grown))};
        part.boundaries.push_back(next);
        current = next;
    }
    return part;
}

std::vector<Money> region_masses(std::span<const Money> boundaries, std::span<const DonorRecord> donors) {
    check_boundaries(boundaries);
    std::vector<Money> masses(boundaries.size() - 1);
    for (const auto& d : donors) {
        auto region = find_region(boundaries, d.amount);
        if (!region) {
            throw std::out_of_range("donor '" + d.id + "' amount " + std::to_string(d.amount.minor()) +
                                    " lies outside the region range");
        }
        masses[*region] += d.amount;
    }
    return masses;
}

}  // namespace donverify
