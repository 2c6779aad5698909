#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "donverify/money.hpp"
#include "donverify/participation.hpp"
#include "donverify/tree.hpp"

namespace donverify {

struct TrialOutcome {
    bool detected = false;
    std::size_t verifier_count = 0;
    std::set<DonorId> detecting_donors;
};

/// Monte Carlo estimate with a 95% Wilson score interval.
struct DetectionEstimate {
    std::uint64_t trials = 0;
    std::uint64_t detections = 0;
    double p_hat = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::uint64_t seed = 0;

    friend bool operator==(const DetectionEstimate&, const DetectionEstimate&) = default;
};

/// Real donors (from `truth`) who would catch the collector: those whose path
/// check with their true amount fails, plus those missing from the tree.
std::set<DonorId> detecting_set(const DonationTree& tree, std::span<const DonorRecord> truth);

/// One round of the protocol: sample verifiers, let each check with their true amount.
TrialOutcome run_trial(const DonationTree& tree, std::span<const DonorRecord> truth, const ParticipationModel& model,
                       std::uint64_t seed);

/// Probability that nobody in the detecting set verifies.
double exact_failure(const DonationTree& tree, std::span<const DonorRecord> truth, const ParticipationModel& model);

/// 1 - exact_failure.
double exact_detection(const DonationTree& tree, std::span<const DonorRecord> truth, const ParticipationModel& model);

/// Trial i uses seed derive_seed(seed, i) and yields exactly run_trial's
/// `detected` for that seed. Work may be split across `threads`; the result
/// does not depend on the split.
DetectionEstimate estimate_detection(const DonationTree& tree, std::span<const DonorRecord> truth,
                                     const ParticipationModel& model, std::uint64_t trials, std::uint64_t seed,
                                     unsigned threads = 1);

/// 95% Wilson score interval for `successes` out of `trials`.
std::pair<double, double> wilson_interval(std::uint64_t successes, std::uint64_t trials);

/// exp(-lambda * epsilon * M): failure bound under exponential participation.
double bound_exponential_failure(double lambda, double epsilon, Money total);

/// 1 - (1 - delta)^ceil(epsilon * M / a): detection bound when amounts lie in [1, a].
double bound_uniform_detection(double delta, double epsilon, Money total, Money max_amount);

/// min(1, sum_j (1 - p_j)^(epsilon * M_j / (1 + ratio))); regions with no mass add nothing.
double bound_regional_failure(std::span<const double> probs, double epsilon, std::span<const Money> region_masses,
                              double ratio);
double bound_regional_failure(const RegionPartition& partition, std::span<const double> probs, double epsilon,
                              std::span<const Money> region_masses);

/// deficit / D(root). Throws when D(root) <= 0.
double epsilon_of(const DonationTree& tree);

/// Largest b_{j+1} / b_j - 1 over consecutive boundaries: the growth bound they honor.
double growth_ratio(std::span<const Money> boundaries);

/// One row of a simulation report.
struct SimulationRow {
    std::string model;   // exponential | uniform | regional
    std::string params;  // lambda=.. | delta=.. | probs=[..]
    double epsilon = 0.0;
    Money total;         // M, the true total
    Money deficit;
    double exact_p = 0.0;
    DetectionEstimate estimate;
    std::optional<double> bound;  // in the model's own form (failure or detection)
    std::string bound_kind;       // failure_upper | detection_lower | none
    std::optional<bool> bound_holds;
};

/// Exact and Monte Carlo detection plus the bound that applies to the model.
SimulationRow simulate(const DonationTree& tree, std::span<const DonorRecord> truth, const ParticipationModel& model,
                       std::uint64_t trials, std::uint64_t seed, unsigned threads = 1);

std::string report_json(std::span<const SimulationRow> rows);
std::string report_csv(std::span<const SimulationRow> rows);

/// Shortest round-trip decimal rendering, used by every report.
std::string format_double(double value);

}  // namespace donverify
