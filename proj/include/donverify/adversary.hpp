#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "donverify/money.hpp"
#include "donverify/tree.hpp"

namespace donverify {

struct ClaimEdit {
    NodeId node;
    Money value;

    friend bool operator==(const ClaimEdit&, const ClaimEdit&) = default;
};

/// A list of claim overwrites applied through set_claim.
struct CheatSpec {
    std::vector<ClaimEdit> edits;
    std::string description;

    friend bool operator==(const CheatSpec&, const CheatSpec&) = default;
};

/// Returns a copy of `tree` with every edit applied. Node ids must be distinct.
DonationTree apply_cheat(const DonationTree& tree, const CheatSpec& spec);

/// True when every node's claim equals its true subtree sum.
bool is_honest(const DonationTree& tree);

/// Lowers V at `node` and at all of its ancestors by `amount`. The only check
/// that starts failing is the one at `node` itself (or its leaf check).
DonationTree skim_at(const DonationTree& tree, NodeId node, Money amount);

/// Takes `total_skim` out of an honest tree through skim_at calls on up to
/// eight randomly chosen nodes, with any remainder taken at the root.
DonationTree random_skim(const DonationTree& tree, Money total_skim, std::uint64_t seed);

enum class OmitEncoding {
    zero_leaf,    // keep the leaf, publish V = 0 for it
    remove_leaf,  // drop the leaf entirely
};

/// Publishes everyone's money except `donor`'s, with every remaining node
/// check consistent. Only the omitted donor can notice.
DonationTree omit_big_donor(const DonationTree& tree, std::string_view donor,
                            OmitEncoding encoding = OmitEncoding::zero_leaf);

/// Two honestly labeled worlds that differ only in donor m{n-1} giving 1 or 0.
struct ScenarioPair {
    DonationTree world_a;  // m{n-1} gave 1, total 1
    DonationTree world_b;  // m{n-1} gave 0, total 0
    DonorId distinguishing_donor;
};

/// Donors m1..m{n-2} share M (remainder on m1), m{n-1} gives 1 or 0, m{n}
/// gives -M. Requires n >= 3, M > 0 and negative donations enabled.
ScenarioPair negative_pair(int n, Money total, int arity_k = 2, bool allow_negative = true);

}  // namespace donverify
