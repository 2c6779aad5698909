#include "donverify/adversary.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "donverify/rng.hpp"

namespace donverify {

DonationTree apply_cheat(const DonationTree& tree, const CheatSpec& spec) {
    std::set<NodeId> seen;
    for (const auto& edit : spec.edits) {
        if (!seen.insert(edit.node).second) {
            throw std::invalid_argument("cheat spec edits node " + std::to_string(to_index(edit.node)) + " twice");
        }
        if (!tree.contains(edit.node)) throw UnknownNode(edit.node);
    }
    DonationTree out = tree;
    for (const auto& edit : spec.edits) out.set_claim(edit.node, edit.value);
    return out;
}

bool is_honest(const DonationTree& tree) { return tree.error_leaves().empty(); }

DonationTree skim_at(const DonationTree& tree, NodeId node, Money amount) {
    DonationTree out = tree;
    for (std::optional<NodeId> id = node; id; id = out.node(*id).parent) {
        out.set_claim(*id, out.claimed(*id) - amount);
    }
    return out;
}

DonationTree random_skim(const DonationTree& tree, Money total_skim, std::uint64_t seed) {
    if (tree.empty()) throw std::invalid_argument("cannot skim an empty tree");
    const NodeId root = *tree.root();
    if (total_skim <= Money{0} || total_skim > tree.ground_truth_sum(root)) {
        throw std::invalid_argument("skim amount must lie in (0, D(root)]");
    }
    if (!is_honest(tree)) throw std::invalid_argument("random_skim expects an honest tree");

    Rng rng(seed);
    std::vector<NodeId> ids;
    ids.reserve(tree.node_count());
    for (const auto& [id, n] : tree.nodes()) ids.push_back(id);
    const auto picks = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(std::min<std::size_t>(8, ids.size()))));
    for (std::size_t i = 0; i < picks; ++i) std::swap(ids[i], ids[i + rng.index(ids.size() - i)]);

    // A skim at X lowers X and every ancestor, so it is capped by the smallest claim on that path.
    auto path_min = [](const DonationTree& t, NodeId from) {
        Money low = t.claimed(from);
        for (auto id = t.node(from).parent; id; id = t.node(*id).parent) low = std::min(low, t.claimed(*id));
        return low;
    };
    DonationTree out = tree;
    Money remaining = total_skim;
    for (std::size_t i = 0; i < picks && remaining > Money{0}; ++i) {
        const Money cap = std::min(remaining, path_min(out, ids[i]));
        if (cap <= Money{0}) continue;
        const Money take = i + 1 == picks ? cap : Money{rng.uniform_int(0, cap.minor())};
        if (take == Money{0}) continue;
        out = skim_at(out, ids[i], take);
        remaining -= take;
    }
    if (remaining > Money{0}) out = skim_at(out, root, remaining);
    return out;
}

DonationTree omit_big_donor(const DonationTree& tree, std::string_view donor, OmitEncoding encoding) {
    const NodeId leaf = tree.leaf_of(donor);
    if (!is_honest(tree)) throw std::invalid_argument("omit_big_donor expects an honest tree");
    if (encoding == OmitEncoding::remove_leaf) {
        DonationTree out = tree;
        out.delete_donation(donor);
        return out;
    }
    return skim_at(tree, leaf, tree.node(leaf).donor->amount);
}

ScenarioPair negative_pair(int n, Money total, int arity_k, bool allow_negative) {
    if (!allow_negative) throw std::invalid_argument("negative_pair needs negative donations enabled");
    if (n < 3) throw std::invalid_argument("negative_pair needs n >= 3");
    if (total <= Money{0}) throw std::invalid_argument("negative_pair needs M > 0");

    const auto shared = static_cast<Money::rep>(n - 2);
    const Money base{total.minor() / shared};
    const Money extra{total.minor() % shared};
    auto donors_with = [&](Money pivot) {
        std::vector<DonorRecord> donors;
        for (int i = 1; i <= n - 2; ++i) donors.push_back({"m" + std::to_string(i), i == 1 ? base + extra : base});
        donors.push_back({"m" + std::to_string(n - 1), pivot});
        donors.push_back({"m" + std::to_string(n), -total});
        return donors;
    };
    const auto a = donors_with(Money{1});
    const auto b = donors_with(Money{0});
    return ScenarioPair{build_tree(a, arity_k, true), build_tree(b, arity_k, true), "m" + std::to_string(n - 1)};
}

}  // namespace donverify
