#include "donverify/simulator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "donverify/rng.hpp"

namespace donverify {

namespace {

constexpr double kWilsonZ = 1.959963984540054;  // two-sided 95%
constexpr double kBoundTolerance = 1e-12;       // float slack when comparing probabilities

std::string model_name(const ParticipationModel& model) {
    switch (model.index()) {
        case 0: return "exponential";
        case 1: return "uniform";
        default: return "regional";
    }
}

std::string model_params(const ParticipationModel& model) {
    if (auto* e = std::get_if<ExponentialModel>(&model)) return "lambda=" + format_double(e->lambda);
    if (auto* u = std::get_if<UniformModel>(&model)) return "delta=" + format_double(u->delta);
    const auto& r = std::get<RegionalModel>(model);
    std::string out = "probs=[";
    for (std::size_t i = 0; i < r.probs.size(); ++i) out += (i ? ";" : "") + format_double(r.probs[i]);
    out += "] boundaries=[";
    for (std::size_t i = 0; i < r.boundaries.size(); ++i) out += (i ? ";" : "") + std::to_string(r.boundaries[i].minor());
    return out + "]";
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

std::set<DonorId> detecting_set(const DonationTree& tree, std::span<const DonorRecord> truth) {
    std::set<DonorId> out;
    for (const auto& d : truth) {
        if (!tree.contains_donor(d.id) || tree.verify_donor_path(d.id, d.amount).is_error) out.insert(d.id);
    }
    return out;
}

TrialOutcome run_trial(const DonationTree& tree, std::span<const DonorRecord> truth, const ParticipationModel& model,
                       std::uint64_t seed) {
    TrialOutcome outcome;
    const auto verifiers = sample_verifiers(model, truth, seed);
    outcome.verifier_count = verifiers.size();
    for (const auto& d : truth) {
        if (!verifiers.contains(d.id)) continue;
        // A donor who cannot find its leaf has caught the collector as surely as a failed check.
        if (!tree.contains_donor(d.id) || tree.verify_donor_path(d.id, d.amount).is_error) {
            outcome.detecting_donors.insert(d.id);
        }
    }
    outcome.detected = !outcome.detecting_donors.empty();
    return outcome;
}

double exact_failure(const DonationTree& tree, std::span<const DonorRecord> truth, const ParticipationModel& model) {
    const auto detecting = detecting_set(tree, truth);
    double failure = 1.0;
    for (const auto& d : truth) {
        if (detecting.contains(d.id)) failure *= abstention_prob(model, d.amount);
    }
    return failure;
}

double exact_detection(const DonationTree& tree, std::span<const DonorRecord> truth, const ParticipationModel& model) {
    return 1.0 - exact_failure(tree, truth, model);
}

std::pair<double, double> wilson_interval(std::uint64_t successes, std::uint64_t trials) {
    if (trials == 0) return {0.0, 1.0};
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = kWilsonZ * kWilsonZ;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = kWilsonZ * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::clamp(std::min(center - half, p), 0.0, 1.0), std::clamp(std::max(center + half, p), 0.0, 1.0)};
}

DetectionEstimate estimate_detection(const DonationTree& tree, std::span<const DonorRecord> truth,
                                     const ParticipationModel& model, std::uint64_t trials, std::uint64_t seed,
                                     unsigned threads) {
    if (trials == 0) throw std::invalid_argument("need at least one trial");
    validate_model(model);

    // Only detecting donors can change a trial's verdict, and each donor's draw
    // comes from its own substream, so the other donors' draws can be skipped.
    struct Watcher {
        std::uint64_t key;
        double prob;
    };
    std::vector<Watcher> watchers;
    const auto detecting = detecting_set(tree, truth);
    for (const auto& d : truth) {
        if (detecting.contains(d.id)) watchers.push_back({fnv1a64(d.id), participation_prob(model, d.amount)});
    }

    auto count = [&](std::uint64_t begin, std::uint64_t end) {
        std::uint64_t hits = 0;
        for (std::uint64_t t = begin; t < end; ++t) {
            const std::uint64_t trial_seed = derive_seed(seed, t);
            for (const auto& w : watchers) {
                if (unit_interval(derive_seed(trial_seed, w.key)) < w.prob) {
                    ++hits;
                    break;
                }
            }
        }
        return hits;
    };

    std::uint64_t detections = 0;
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::min<std::uint64_t>(trials, 64))));
    if (workers == 1) {
        detections = count(0, trials);
    } else {
        std::vector<std::uint64_t> partial(workers, 0);
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            const std::uint64_t begin = trials * w / workers;
            const std::uint64_t end = trials * (w + 1) / workers;
            pool.emplace_back([&, w, begin, end] { partial[w] = count(begin, end); });
        }
        for (auto& th : pool) th.join();
        for (auto p : partial) detections += p;
    }

    DetectionEstimate est;
    est.trials = trials;
    est.detections = detections;
    est.p_hat = static_cast<double>(detections) / static_cast<double>(trials);
    std::tie(est.ci_low, est.ci_high) = wilson_interval(detections, trials);
    est.seed = seed;
    return est;
}

double bound_exponential_failure(double lambda, double epsilon, Money total) {
    return std::exp(-lambda * epsilon * total.to_double());
}

double bound_uniform_detection(double delta, double epsilon, Money total, Money max_amount) {
    if (max_amount < Money{1}) throw std::invalid_argument("uniform bound needs a >= 1");
    const double ratio = epsilon * total.to_double() / max_amount.to_double();
    double needed = std::ceil(ratio);
    // epsilon is usually a decimal like 0.1, so an integral ratio can land a hair above the integer.
    if (needed - ratio > 1.0 - 1e-9) needed -= 1.0;
    return 1.0 - std::pow(1.0 - delta, needed);
}

double bound_regional_failure(std::span<const double> probs, double epsilon, std::span<const Money> region_masses,
                              double ratio) {
    if (probs.size() != region_masses.size()) {
        throw std::invalid_argument("regional bound needs one probability per region mass");
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < probs.size(); ++j) {
        if (region_masses[j] <= Money{0}) continue;
        sum += std::pow(1.0 - probs[j], epsilon * region_masses[j].to_double() / (1.0 + ratio));
    }
    return std::clamp(sum, 0.0, 1.0);
}

double bound_regional_failure(const RegionPartition& partition, std::span<const double> probs, double epsilon,
                              std::span<const Money> region_masses) {
    if (probs.size() != partition.interval_count()) {
        throw std::invalid_argument("regional bound needs one probability per partition interval");
    }
    return bound_regional_failure(probs, epsilon, region_masses, partition.ratio);
}

double epsilon_of(const DonationTree& tree) {
    if (tree.empty()) throw std::invalid_argument("epsilon of an empty tree is undefined");
    const Money total = tree.ground_truth_sum(*tree.root());
    if (total <= Money{0}) throw std::invalid_argument("epsilon needs D(root) > 0");
    return tree.deficit().to_double() / total.to_double();
}

double growth_ratio(std::span<const Money> boundaries) {
    double worst = 0.0;
    for (std::size_t i = 1; i < boundaries.size(); ++i) {
        if (boundaries[i - 1] <= Money{0}) throw std::invalid_argument("growth ratio needs positive boundaries");
        worst = std::max(worst, boundaries[i].to_double() / boundaries[i - 1].to_double() - 1.0);
    }
    return worst;
}

SimulationRow simulate(const DonationTree& tree, std::span<const DonorRecord> truth, const ParticipationModel& model,
                       std::uint64_t trials, std::uint64_t seed, unsigned threads) {
    validate_model(model);
    SimulationRow row;
    row.model = model_name(model);
    row.params = model_params(model);
    for (const auto& d : truth) row.total += d.amount;
    const Money claimed = tree.empty() ? Money{} : tree.claimed(*tree.root());
    row.deficit = row.total - claimed;
    row.epsilon = row.total > Money{0} ? std::max(0.0, row.deficit.to_double() / row.total.to_double()) : 0.0;
    const double failure = exact_failure(tree, truth, model);
    row.exact_p = 1.0 - failure;
    row.estimate = estimate_detection(tree, truth, model, trials, seed, threads);

    const bool positive = !truth.empty() && std::all_of(truth.begin(), truth.end(),
                                                        [](const DonorRecord& d) { return d.amount >= Money{1}; });
    row.bound_kind = "none";
    if (!positive) return row;

    if (auto* e = std::get_if<ExponentialModel>(&model)) {
        row.bound = bound_exponential_failure(e->lambda, row.epsilon, row.total);
        row.bound_kind = "failure_upper";
        row.bound_holds = failure <= *row.bound + kBoundTolerance;
    } else if (auto* u = std::get_if<UniformModel>(&model)) {
        Money a{1};
        for (const auto& d : truth) a = std::max(a, d.amount);
        row.bound = bound_uniform_detection(u->delta, row.epsilon, row.total, a);
        row.bound_kind = "detection_lower";
        row.bound_holds = row.exact_p + kBoundTolerance >= *row.bound;
    } else {
        const auto& r = std::get<RegionalModel>(model);
        const auto masses = region_masses(r.boundaries, truth);
        row.bound = bound_regional_failure(r.probs, row.epsilon, masses, growth_ratio(r.boundaries));
        row.bound_kind = "failure_upper";
        row.bound_holds = failure <= *row.bound + kBoundTolerance;
    }
    return row;
}

std::string report_json(std::span<const SimulationRow> rows) {
    auto doc = nlohmann::ordered_json::array();
    for (const auto& row : rows) {
        nlohmann::ordered_json j;
        j["model"] = row.model;
        j["params"] = row.params;
        j["epsilon"] = row.epsilon;
        j["M"] = row.total.minor();
        j["deficit"] = row.deficit.minor();
        j["exact_p"] = row.exact_p;
        j["p_hat"] = row.estimate.p_hat;
        j["ci_low"] = row.estimate.ci_low;
        j["ci_high"] = row.estimate.ci_high;
        j["trials"] = row.estimate.trials;
        j["detections"] = row.estimate.detections;
        j["seed"] = row.estimate.seed;
        j["bound_kind"] = row.bound_kind;
        j["bound"] = row.bound ? nlohmann::ordered_json(*row.bound) : nlohmann::ordered_json(nullptr);
        j["bound_holds"] = row.bound_holds ? nlohmann::ordered_json(*row.bound_holds) : nlohmann::ordered_json(nullptr);
        doc.push_back(std::move(j));
    }
    return doc.dump(2) + "\n";
}

std::string report_csv(std::span<const SimulationRow> rows) {
    std::ostringstream out;
    out << "model,params,epsilon,M,exact_p,p_hat,ci_low,ci_high,bound,bound_holds,bound_kind,trials,detections,seed\n";
    for (const auto& row : rows) {
        out << row.model << ",\"" << row.params << "\"," << format_double(row.epsilon) << ',' << row.total.minor()
            << ',' << format_double(row.exact_p) << ',' << format_double(row.estimate.p_hat) << ','
            << format_double(row.estimate.ci_low) << ',' << format_double(row.estimate.ci_high) << ','
            << (row.bound ? format_double(*row.bound) : "") << ','
            << (row.bound_holds ? (*row.bound_holds ? "true" : "false") : "") << ',' << row.bound_kind << ','
            << row.estimate.trials << ',' << row.estimate.detections << ',' << row.estimate.seed << '\n';
    }
    return out.str();
}

}  // namespace donverify
