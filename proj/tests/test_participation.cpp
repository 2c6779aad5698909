#include <gtest/gtest.h>

#include <cmath>

#include "donverify/participation.hpp"
#include "support/oracles.hpp"

using namespace donverify;
using namespace donverify::testing;

TEST(ParticipationProb, Exponential) {
    const ParticipationModel m = ExponentialModel{0.01};
    EXPECT_NEAR(participation_prob(m, Money{100}), 0.6321205588285577, 1e-15);
    EXPECT_NEAR(participation_prob(m, Money{84}), 0.5682894765709203, 1e-15);
    EXPECT_NEAR(abstention_prob(ExponentialModel{0.5}, Money{1}), 0.6065306597126334, 1e-15);
    EXPECT_EQ(participation_prob(m, Money{0}), 0.0);
    EXPECT_EQ(participation_prob(m, Money{-5}), 0.0);
    EXPECT_EQ(abstention_prob(m, Money{-5}), 1.0);
    EXPECT_EQ(participation_prob(ExponentialModel{0.0}, Money{1000}), 0.0);
    // Tiny exponents keep full relative precision.
    EXPECT_NEAR(participation_prob(ExponentialModel{1e-12}, Money{1}) / 1e-12, 1.0, 1e-9);
}

TEST(ParticipationProb, UniformAndRegional) {
    EXPECT_EQ(participation_prob(UniformModel{0.3}, Money{7}), 0.3);
    EXPECT_EQ(participation_prob(UniformModel{0.3}, Money{-7}), 0.3);
    const RegionalModel r{{Money{1}, Money{8}, Money{64}}, {0.1, 0.9}};
    EXPECT_EQ(participation_prob(r, Money{7}), 0.1);
    EXPECT_EQ(participation_prob(r, Money{8}), 0.9);
    EXPECT_EQ(participation_prob(r, Money{64}), 0.9);
    EXPECT_THROW((void)participation_prob(r, Money{65}), std::out_of_range);
}

TEST(ValidateModel, Rejections) {
    EXPECT_THROW(validate_model(ExponentialModel{-1.0}), std::invalid_argument);
    EXPECT_THROW(validate_model(ExponentialModel{NAN}), std::invalid_argument);
    EXPECT_THROW(validate_model(UniformModel{1.01}), std::invalid_argument);
    EXPECT_THROW(validate_model(RegionalModel{{Money{1}, Money{8}}, {0.1, 0.2}}), std::invalid_argument);
    EXPECT_THROW(validate_model(RegionalModel{{Money{8}, Money{1}}, {0.1}}), std::invalid_argument);
    EXPECT_THROW(validate_model(RegionalModel{{Money{1}}, {}}), std::invalid_argument);
    EXPECT_NO_THROW(validate_model(RegionalModel{{Money{5}, Money{5}}, {0.4}}));
}

TEST(SampleVerifiers, DeterministicAndOrderFree) {
    Rng rng(3);
    auto donors = random_donors(rng, 50, 100);
    const ParticipationModel m = ExponentialModel{0.02};
    const auto first = sample_verifiers(m, donors, 42);
    EXPECT_EQ(sample_verifiers(m, donors, 42), first);
    std::reverse(donors.begin(), donors.end());
    EXPECT_EQ(sample_verifiers(m, donors, 42), first);
    EXPECT_NE(sample_verifiers(m, donors, 43), first);
}

TEST(SampleVerifiers, EdgeProbabilities) {
    const auto donors = example_truth();
    EXPECT_TRUE(sample_verifiers(UniformModel{0.0}, donors, 1).empty());
    EXPECT_EQ(sample_verifiers(UniformModel{1.0}, donors, 1).size(), donors.size());
}

TEST(SampleVerifiers, FrequencyMatchesProbability) {
    const std::vector<DonorRecord> donors{{"x", Money{30}}};
    const ParticipationModel m = ExponentialModel{0.01};
    const double p = participation_prob(m, Money{30});
    int hits = 0;
    const int trials = 100000;
    for (int s = 0; s < trials; ++s) hits += static_cast<int>(sample_verifiers(m, donors, static_cast<std::uint64_t>(s)).size());
    const double sigma = std::sqrt(p * (1 - p) / trials);
    EXPECT_NEAR(static_cast<double>(hits) / trials, p, 4 * sigma);
}

TEST(MakePartition, DoublingUpToCap) {
    const auto part = make_partition(Money{1}, Money{1000}, 1.0);
    const std::vector<Money> expected{Money{1}, Money{2}, Money{4}, Money{8}, Money{16}, Money{32},
                                      Money{64}, Money{128}, Money{256}, Money{512}, Money{1000}};
    EXPECT_EQ(part.boundaries, expected);
    EXPECT_EQ(part.interval_count(), 10u);
}

TEST(MakePartition, GrowthNeverExceedsRatio) {
    for (double r : {0.1, 0.25, 0.5, 1.0, 3.0}) {
        for (std::int64_t a0 : {10, 37, 100}) {
            const auto part = make_partition(Money{a0}, Money{5000}, r);
            EXPECT_EQ(part.boundaries.front(), Money{a0});
            EXPECT_EQ(part.boundaries.back(), Money{5000});
            for (std::size_t i = 1; i < part.boundaries.size(); ++i) {
                EXPECT_LT(part.boundaries[i - 1], part.boundaries[i]);
                EXPECT_LE(part.boundaries[i].to_double(), part.boundaries[i - 1].to_double() * (1 + r) + 1e-9);
            }
        }
    }
}

TEST(MakePartition, EdgeCases) {
    EXPECT_EQ(make_partition(Money{5}, Money{5}, 0.5).boundaries, (std::vector<Money>{Money{5}, Money{5}}));
    EXPECT_THROW(make_partition(Money{0}, Money{5}, 1.0), std::invalid_argument);
    EXPECT_THROW(make_partition(Money{6}, Money{5}, 1.0), std::invalid_argument);
    EXPECT_THROW(make_partition(Money{1}, Money{5}, 0.5), std::invalid_argument);
    EXPECT_THROW(make_partition(Money{1}, Money{5}, -1.0), std::invalid_argument);
}

TEST(RegionMasses, SumsPerInterval) {
    const std::vector<Money> b{Money{1}, Money{8}, Money{64}, Money{512}};
    const auto masses = region_masses(b, example_truth());
    EXPECT_EQ(masses, (std::vector<Money>{Money{6}, Money{10}, Money{84}}));
    const std::vector<DonorRecord> outside{{"z", Money{600}}};
    EXPECT_THROW(region_masses(b, outside), std::out_of_range);
}
