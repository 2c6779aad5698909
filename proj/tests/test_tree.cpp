#include <gtest/gtest.h>

#include <numeric>

#include "donverify/tree.hpp"
#include "support/oracles.hpp"

using namespace donverify;
using namespace donverify::testing;

namespace {

std::vector<DonorRecord> ones(std::size_t n) {
    std::vector<DonorRecord> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back({"u" + std::to_string(i), Money{1}});
    return out;
}

}  // namespace

TEST(BuildTree, WorkedExampleShape) {
    const auto ex = worked_example();
    const auto& t = ex.tree;
    EXPECT_EQ(t.node_count(), 7u);
    EXPECT_EQ(*t.node(ex.e).parent, ex.b);
    EXPECT_EQ(*t.node(ex.g).parent, ex.c);
    EXPECT_EQ(*t.node(ex.b).parent, ex.a);
    EXPECT_EQ(*t.node(ex.c).parent, ex.a);
    EXPECT_EQ(t.claimed(ex.b), Money{6});
    EXPECT_EQ(t.claimed(ex.c), Money{94});
    EXPECT_EQ(t.claimed(ex.a), Money{100});
    EXPECT_TRUE(brute_sum_consistent(t));
}

TEST(BuildTree, IdsFollowConstructionOrder) {
    const auto ex = worked_example();
    EXPECT_EQ(to_index(ex.d), 0u);
    EXPECT_EQ(to_index(ex.e), 1u);
    EXPECT_EQ(to_index(ex.f), 2u);
    EXPECT_EQ(to_index(ex.g), 3u);
    EXPECT_EQ(to_index(ex.b), 4u);
    EXPECT_EQ(to_index(ex.c), 5u);
    EXPECT_EQ(to_index(ex.a), 6u);
}

TEST(BuildTree, SingleDonor) {
    const std::vector<DonorRecord> donors{{"x", Money{42}}};
    const auto t = build_tree(donors, 2);
    ASSERT_TRUE(t.root());
    EXPECT_EQ(t.claimed(*t.root()), Money{42});
    EXPECT_TRUE(t.node(*t.root()).is_leaf());
    EXPECT_EQ(t.depth(), 0u);
}

TEST(BuildTree, ThousandUnitDonors) {
    const auto donors = ones(1000);
    const auto t = build_tree(donors, 2);
    Money scan{};
    for (const auto& d : donors) scan += d.amount;
    EXPECT_EQ(t.claimed(*t.root()), scan);
    EXPECT_EQ(brute_depth(t), t.depth());
    EXPECT_LE(t.depth(), ceil_log2(1000) + DonationTree::kDepthSlack);
    EXPECT_TRUE(brute_sum_consistent(t));
}

TEST(BuildTree, ArityAndDepthAcrossSizes) {
    for (int k : {2, 3, 4, 5, 9}) {
        for (std::size_t n = 1; n <= 300; n += (n < 40 ? 1 : 37)) {
            const auto t = build_tree(ones(n), k);
            ASSERT_NO_THROW(t.validate()) << "k=" << k << " n=" << n;
            EXPECT_TRUE(t.maintainable());
            EXPECT_LE(t.max_fanout(), static_cast<std::size_t>(k));
            EXPECT_EQ(brute_depth(t), t.depth());
            EXPECT_LE(t.depth(), ceil_log2(n) + DonationTree::kDepthSlack) << "k=" << k << " n=" << n;
            EXPECT_TRUE(brute_sum_consistent(t));
        }
    }
}

TEST(BuildTree, Rejections) {
    EXPECT_THROW(build_tree(std::vector<DonorRecord>{}, 2), std::invalid_argument);
    const std::vector<DonorRecord> dup{{"a", Money{1}}, {"b", Money{2}}, {"a", Money{3}}};
    try {
        (void)build_tree(dup, 2);
        FAIL() << "duplicate accepted";
    } catch (const DuplicateDonor& e) {
        EXPECT_EQ(e.donor(), "a");
    }
    const std::vector<DonorRecord> negative{{"a", Money{1}}, {"b", Money{-2}}};
    EXPECT_THROW(build_tree(negative, 2), std::invalid_argument);
    EXPECT_NO_THROW(build_tree(negative, 2, true));
    EXPECT_THROW(build_tree(ones(3), 1), std::invalid_argument);
}

TEST(GroundTruthSum, Examples) {
    const auto ex = worked_example();
    EXPECT_EQ(ex.tree.ground_truth_sum(ex.c), Money{94});
    EXPECT_EQ(ex.tree.ground_truth_sum(ex.g), Money{84});
    const auto tampered = tampered_example(ex);
    EXPECT_EQ(tampered.ground_truth_sum(ex.a), Money{1 + 5 + 10 + 84});
    EXPECT_THROW((void)ex.tree.ground_truth_sum(NodeId{99}), UnknownNode);
}

TEST(SetClaim, ProducesTamperedExample) {
    const auto ex = worked_example();
    auto t = ex.tree;
    t.set_claim(ex.a, Money{96});
    t.set_claim(ex.c, Money{90});
    EXPECT_EQ(t, tampered_example(ex));
    EXPECT_EQ(t.claimed(ex.b), Money{6});
    EXPECT_EQ(t.claimed(ex.f), Money{10});
    EXPECT_THROW(t.set_claim(NodeId{1234}, Money{1}), UnknownNode);
}

TEST(SetClaim, RootOnlySkimPutsEveryLeafInError) {
    const auto ex = worked_example();
    auto t = ex.tree;
    t.set_claim(ex.a, t.ground_truth_sum(ex.a) - Money{4});
    const auto oracle = brute_error_leaves(t);
    EXPECT_EQ(oracle, (std::set<DonorId>{"d", "e", "f", "g"}));
    const auto got = t.error_leaves();
    EXPECT_EQ(std::set<DonorId>(got.begin(), got.end()), oracle);
}

TEST(VerifyDonorPath, TamperedExample) {
    const auto ex = worked_example();
    const auto t = tampered_example(ex);

    const auto f = t.verify_donor_path("f", Money{10});
    EXPECT_TRUE(f.is_error);
    EXPECT_TRUE(f.leaf_ok);
    ASSERT_EQ(f.node_checks.size(), 2u);
    EXPECT_EQ(f.node_checks[0].node, ex.c);
    EXPECT_EQ(f.node_checks[0].claimed, Money{90});
    EXPECT_EQ(f.node_checks[0].children_sum, Money{94});
    EXPECT_EQ(f.node_checks[0].kind, CheckKind::under_claim);
    EXPECT_TRUE(f.node_checks[1].ok());

    const auto d = t.verify_donor_path("d", Money{1});
    EXPECT_FALSE(d.is_error);
    ASSERT_EQ(d.node_checks.size(), 2u);
    EXPECT_EQ(d.node_checks[0].children_sum, Money{6});
    EXPECT_EQ(d.node_checks[1].claimed, Money{96});
    EXPECT_EQ(d.node_checks[1].children_sum, Money{96});
}

TEST(VerifyDonorPath, HonestTreeNeverErrs) {
    const auto ex = worked_example();
    for (const auto& rec : example_truth()) {
        const auto r = ex.tree.verify_donor_path(rec.id, rec.amount);
        EXPECT_FALSE(r.is_error) << rec.id;
        EXPECT_EQ(r.node_checks.size(), ex.tree.depth_of(ex.tree.leaf_of(rec.id)));
    }
}

TEST(VerifyDonorPath, LeafMismatchAndUnknownDonor) {
    const auto ex = worked_example();
    const auto r = ex.tree.verify_donor_path("g", Money{85});
    EXPECT_FALSE(r.leaf_ok);
    EXPECT_TRUE(r.is_error);
    EXPECT_THROW((void)ex.tree.verify_donor_path("zz", Money{1}), UnknownDonor);
}

TEST(VerifyDonorPath, OverClaimIsFlaggedSeparately) {
    const auto ex = worked_example();
    auto t = ex.tree;
    t.set_claim(ex.b, Money{7});
    const auto r = t.verify_donor_path("d", Money{1});
    EXPECT_TRUE(r.is_error);
    EXPECT_EQ(r.node_checks[0].kind, CheckKind::over_claim);
    EXPECT_EQ(r.node_checks[1].kind, CheckKind::under_claim);  // a: 100 < 7 + 94
    const auto diag = t.diagnose();
    ASSERT_EQ(diag.size(), 4u);
    EXPECT_TRUE(diag[0].over_claim_on_path);  // d
    EXPECT_FALSE(diag[2].over_claim_on_path);  // f
    EXPECT_TRUE(diag[2].under_claim_on_path);
}

TEST(VerifyDonorPath, StepBound) {
    Rng rng(5);
    for (int k : {2, 3, 5}) {
        const auto t = build_tree(random_donors(rng, 200, 50), k);
        for (const auto& [donor, leaf] : t.donor_index()) {
            const auto r = t.verify_donor_path(donor, t.node(leaf).donor->amount);
            EXPECT_LE(r.steps, static_cast<std::size_t>(k) * t.depth_of(leaf) + 1);
        }
    }
}

TEST(ErrorLeaves, Examples) {
    const auto ex = worked_example();
    EXPECT_TRUE(ex.tree.error_leaves().empty());
    EXPECT_EQ(tampered_example(ex).error_leaves(), (std::vector<DonorId>{"f", "g"}));
}

TEST(ErrorLeaves, MatchesPerLeafOracleAndVerify) {
    Rng rng(99);
    for (int round = 0; round < 200; ++round) {
        const int k = std::array{2, 3, 5}[round % 3];
        const auto honest = build_tree(random_donors(rng, 1 + rng.index(40), 30), k);
        const auto t = random_edits(honest, rng, rng.index(4));
        const auto got = t.error_leaves();
        EXPECT_EQ(std::set<DonorId>(got.begin(), got.end()), brute_error_leaves(t));
        for (const auto& [donor, leaf] : t.donor_index()) {
            const bool listed = std::binary_search(got.begin(), got.end(), donor);
            EXPECT_EQ(t.verify_donor_path(donor, t.node(leaf).donor->amount).is_error, listed);
        }
    }
}

TEST(Deficit, Examples) {
    const auto ex = worked_example();
    EXPECT_EQ(ex.tree.deficit(), Money{0});
    EXPECT_EQ(tampered_example(ex).deficit(), Money{4});
    auto t = ex.tree;
    t.set_claim(ex.a, t.claimed(ex.a) - Money{7});
    EXPECT_EQ(t.deficit(), Money{7});
    EXPECT_EQ(DonationTree(2).deficit(), Money{0});
}

TEST(ErrorMass, Examples) {
    const auto ex = worked_example();
    EXPECT_TRUE(ex.tree.check_count_lemma());
    const auto t = tampered_example(ex);
    EXPECT_TRUE(t.check_count_lemma());
    Money mass{};
    for (const auto& d : t.error_leaves()) mass += t.node(t.leaf_of(d)).donor->amount;
    EXPECT_EQ(mass, Money{94});
}

TEST(ErrorMass, HoldsForRandomClaimEdits) {
    Rng rng(2024);
    for (int round = 0; round < 1000; ++round) {
        const int k = std::array{2, 3, 5}[round % 3];
        const auto honest = build_tree(random_donors(rng, 1 + rng.index(64), 100), k);
        const auto t = random_edits(honest, rng, 1 + rng.index(6));
        ASSERT_TRUE(t.check_count_lemma()) << "round " << round;
    }
}

TEST(RegionForest, ThreeRegions) {
    const std::vector<DonorRecord> donors{{"d", Money{1}}, {"e", Money{5}}, {"f", Money{10}}, {"g", Money{84}}};
    const std::vector<Money> bounds{Money{1}, Money{8}, Money{64}, Money{512}};
    const auto t = build_region_forest(donors, bounds, 2);
    ASSERT_NO_THROW(t.validate());
    const auto root = *t.root();
    EXPECT_EQ(t.claimed(root), Money{100});
    const auto& kids = t.node(root).children;
    ASSERT_EQ(kids.size(), 3u);
    EXPECT_EQ(t.claimed(kids[0]), Money{6});
    EXPECT_EQ(t.ground_truth_sum(kids[1]), Money{10});
    EXPECT_EQ(t.ground_truth_sum(kids[2]), Money{84});
    EXPECT_EQ(*t.node(t.leaf_of("d")).parent, *t.node(t.leaf_of("e")).parent);
    EXPECT_EQ(t.leaf_count(), 4u);
    EXPECT_TRUE(t.error_leaves().empty());
}

TEST(RegionForest, SingleRegionAddsRootLink) {
    const std::vector<DonorRecord> donors{{"a", Money{3}}, {"b", Money{4}}, {"c", Money{5}}};
    const std::vector<Money> bounds{Money{1}, Money{100}};
    const auto forest = build_region_forest(donors, bounds, 2);
    const auto plain = build_tree(donors, 2);
    ASSERT_EQ(forest.node(*forest.root()).children.size(), 1u);
    const NodeId sub = forest.node(*forest.root()).children.front();
    EXPECT_EQ(forest.claimed(sub), plain.claimed(*plain.root()));
    EXPECT_EQ(forest.node_count(), plain.node_count() + 1);
    EXPECT_EQ(forest.depth(), plain.depth() + 1);
}

TEST(RegionForest, EmptyRegionsOmittedAndOutOfRangeRejected) {
    const std::vector<DonorRecord> donors{{"a", Money{2}}, {"b", Money{300}}};
    const std::vector<Money> bounds{Money{1}, Money{8}, Money{64}, Money{512}};
    const auto t = build_region_forest(donors, bounds, 3);
    EXPECT_EQ(t.node(*t.root()).children.size(), 2u);

    const std::vector<DonorRecord> bad{{"a", Money{2}}, {"far", Money{600}}};
    try {
        (void)build_region_forest(bad, bounds, 2);
        FAIL();
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("far"), std::string::npos);
    }
}

TEST(Validate, RejectsBrokenStructures) {
    auto make = [](std::map<NodeId, Node> nodes) { return DonationTree::from_nodes(2, false, std::move(nodes)); };
    // two roots
    EXPECT_THROW(make({{NodeId{0}, Node{std::nullopt, {}, Money{1}, DonorRecord{"a", Money{1}}}},
                       {NodeId{1}, Node{std::nullopt, {}, Money{1}, DonorRecord{"b", Money{1}}}}}),
                 StructureError);
    // cycle: 1 <-> 2 under no root
    EXPECT_THROW(make({{NodeId{1}, Node{NodeId{2}, {NodeId{2}}, Money{1}, std::nullopt}},
                       {NodeId{2}, Node{NodeId{1}, {NodeId{1}}, Money{1}, std::nullopt}}}),
                 StructureError);
    // internal node with donor payload
    EXPECT_THROW(make({{NodeId{0}, Node{NodeId{2}, {}, Money{1}, DonorRecord{"a", Money{1}}}},
                       {NodeId{1}, Node{NodeId{2}, {}, Money{1}, DonorRecord{"b", Money{1}}}},
                       {NodeId{2}, Node{std::nullopt, {NodeId{0}, NodeId{1}}, Money{2}, DonorRecord{"c", Money{2}}}}}),
                 StructureError);
    // internal node exceeding k below the root
    std::map<NodeId, Node> wide;
    wide[NodeId{9}] = Node{std::nullopt, {NodeId{8}, NodeId{7}}, Money{0}, std::nullopt};
    wide[NodeId{7}] = Node{NodeId{9}, {}, Money{1}, DonorRecord{"z", Money{1}}};
    wide[NodeId{8}] = Node{NodeId{9}, {NodeId{0}, NodeId{1}, NodeId{2}}, Money{0}, std::nullopt};
    for (int i = 0; i < 3; ++i) {
        wide[NodeId{static_cast<std::uint32_t>(i)}] =
            Node{NodeId{8}, {}, Money{1}, DonorRecord{"w" + std::to_string(i), Money{1}}};
    }
    EXPECT_THROW(make(wide), StructureError);
}
