#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "donverify/money.hpp"

namespace donverify {

enum class NodeId : std::uint32_t {};

constexpr std::uint32_t to_index(NodeId id) { return static_cast<std::uint32_t>(id); }

using DonorId = std::string;

struct DonorRecord {
    DonorId id;
    Money amount;

    friend bool operator==(const DonorRecord&, const DonorRecord&) = default;
};

struct Node {
    std::optional<NodeId> parent;
    std::vector<NodeId> children;  // empty for leaves
    Money claimed;                 // V(N), the collector's claim
    std::optional<DonorRecord> donor;  // leaf payload; amount is the ground truth D(leaf)

    [[nodiscard]] bool is_leaf() const { return donor.has_value(); }

    friend bool operator==(const Node&, const Node&) = default;
};

class UnknownDonor : public std::out_of_range {
public:
    explicit UnknownDonor(std::string_view donor)
        : std::out_of_range("unknown donor '" + std::string(donor) + "'"), donor_(donor) {}
    [[nodiscard]] const std::string& donor() const { return donor_; }

private:
    std::string donor_;
};

class UnknownNode : public std::out_of_range {
public:
    explicit UnknownNode(NodeId id) : std::out_of_range("unknown node " + std::to_string(to_index(id))) {}
};

class DuplicateDonor : public std::invalid_argument {
public:
    explicit DuplicateDonor(std::string_view donor)
        : std::invalid_argument("duplicate donor '" + std::string(donor) + "'"), donor_(donor) {}
    [[nodiscard]] const std::string& donor() const { return donor_; }

private:
    std::string donor_;
};

/// Raised for malformed trees: cycles, several roots, bad arity, payload misuse.
class StructureError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Outcome of one node equality check on a verification path.
enum class CheckKind { ok, under_claim, over_claim };

struct NodeCheck {
    NodeId node;
    Money claimed;
    Money children_sum;
    CheckKind kind;

    [[nodiscard]] bool ok() const { return kind == CheckKind::ok; }
    friend bool operator==(const NodeCheck&, const NodeCheck&) = default;
};

/// What one donor observes when checking the published tree.
struct PathReport {
    DonorId donor;
    Money claimed_donation;
    Money leaf_value;
    bool leaf_ok = false;
    std::vector<NodeCheck> node_checks;  // leaf's parent first, root last
    bool is_error = false;
    std::size_t steps = 0;  // leaf read plus one per child summed

    friend bool operator==(const PathReport&, const PathReport&) = default;
};

/// Why a leaf's verification fails; several flags may be set at once.
struct LeafDiagnosis {
    DonorId donor;
    bool leaf_mismatch = false;
    bool under_claim_on_path = false;
    bool over_claim_on_path = false;

    [[nodiscard]] bool is_error() const { return leaf_mismatch || under_claim_on_path || over_claim_on_path; }
};

/// A k-ary donation tree: leaves carry donor records, every node carries the
/// collector's claimed value V(N).
///
/// Trees produced by build_tree are kept in a complete k-ary layout (slot p has
/// child slots kp+1..kp+k). Slots are internal bookkeeping: a node's children
/// list is always sorted by id, since the file format carries no sibling order.
/// insert_donation and delete_donation keep
/// that layout, so every leaf sits at depth at most ceil(log2 n) + kDepthSlack
/// and a single edit writes at most kTouchFactor * (depth + 1) distinct nodes. Leaves are
/// not ordered by donor; the donor index is the only lookup path.
///
/// Node ids: build assigns leaves 0..n-1 in input order, then internal nodes
/// level by level from the bottom, in slot order, so the root gets the largest
/// id. New nodes take fresh ids; deleted ids are never reused. The root keeps
/// its id under maintenance except when the tree grows from, or shrinks to, a
/// single leaf (that leaf is then the root). The empty tree has no nodes and no
/// root.
///
/// Structural edits preserve the slack V(N) - sum of children's V of every
/// surviving node, so a tampered tree stays tampered in the same way.
class DonationTree {
public:
    static constexpr std::size_t kDepthSlack = 1;
    static constexpr std::size_t kTouchFactor = 4;

    DonationTree(int arity_k, bool allow_negative = false);

    /// Assembles a tree from explicit nodes (e.g. a parsed file) and validates
    /// it. Leaves whose true amount is unknown should carry their claimed value.
    static DonationTree from_nodes(int arity_k, bool allow_negative, std::map<NodeId, Node> nodes);

    [[nodiscard]] int arity() const { return arity_; }
    [[nodiscard]] bool allow_negative() const { return allow_negative_; }
    [[nodiscard]] bool empty() const { return nodes_.empty(); }
    [[nodiscard]] std::size_t leaf_count() const { return donor_index_.size(); }
    [[nodiscard]] std::size_t node_count() const { return nodes_.size(); }
    [[nodiscard]] std::optional<NodeId> root() const { return root_; }
    [[nodiscard]] const std::map<NodeId, Node>& nodes() const { return nodes_; }
    [[nodiscard]] const Node& node(NodeId id) const;
    [[nodiscard]] bool contains(NodeId id) const { return nodes_.contains(id); }
    [[nodiscard]] bool contains_donor(std::string_view donor) const { return donor_index_.contains(donor); }
    [[nodiscard]] NodeId leaf_of(std::string_view donor) const;
    [[nodiscard]] const std::map<DonorId, NodeId, std::less<>>& donor_index() const { return donor_index_; }
    /// Donor records in donor-id order; amounts are the stored ground truth.
    [[nodiscard]] std::vector<DonorRecord> donors() const;

    /// Longest root-to-leaf edge count; 0 for a single leaf or empty tree.
    [[nodiscard]] std::size_t depth() const;
    [[nodiscard]] std::size_t depth_of(NodeId id) const;
    /// Largest child count over internal nodes (the root of a region forest may exceed k).
    [[nodiscard]] std::size_t max_fanout() const;
    /// True when the tree is in the complete k-ary layout and supports insert/delete.
    [[nodiscard]] bool maintainable() const { return !slots_.empty() || nodes_.empty(); }
    /// Distinct nodes written or removed by the most recent insert_donation / delete_donation.
    [[nodiscard]] std::size_t last_touched() const { return touched_.size(); }

    /// D(N): sum of the true leaf amounts below `id`, independent of claims.
    [[nodiscard]] Money ground_truth_sum(NodeId id) const;
    [[nodiscard]] Money claimed(NodeId id) const { return node(id).claimed; }
    [[nodiscard]] Money children_sum(NodeId id) const;
    /// D(root) - V(root); zero for the empty tree.
    [[nodiscard]] Money deficit() const;

    void insert_donation(DonorRecord record);
    void delete_donation(std::string_view donor);
    void set_claim(NodeId id, Money value);
    /// Replaces the ground-truth amount recorded at a donor's leaf.
    void set_true_amount(std::string_view donor, Money amount);

    [[nodiscard]] PathReport verify_donor_path(std::string_view donor, Money claimed_donation) const;
    /// Donors whose check with their true amount fails, sorted by id.
    [[nodiscard]] std::vector<DonorId> error_leaves() const;
    /// One entry per leaf, in donor-id order.
    [[nodiscard]] std::vector<LeafDiagnosis> diagnose() const;
    /// Sum of true amounts over error_leaves() is at least deficit().
    [[nodiscard]] bool check_count_lemma() const;

    /// Throws StructureError if any structural invariant is broken.
    void validate() const;

    friend bool operator==(const DonationTree& a, const DonationTree& b) {
        return a.arity_ == b.arity_ && a.allow_negative_ == b.allow_negative_ && a.root_ == b.root_ &&
               a.nodes_ == b.nodes_;
    }

private:
    friend DonationTree build_tree(std::span<const DonorRecord>, int, bool);
    friend DonationTree build_region_forest(std::span<const DonorRecord>, std::span<const Money>, int);

    Node& mut(NodeId id);
    NodeId new_node(Node node);
    void check_record(const DonorRecord& record) const;
    NodeId append_layout(std::span<const DonorRecord> records, std::vector<NodeId>& slots);
    void add_up(std::optional<NodeId> from, Money delta);
    void detach(NodeId child);
    void replace_child(NodeId old_child, NodeId new_child);
    void recognize_layout();

    int arity_;
    bool allow_negative_;
    std::map<NodeId, Node> nodes_;
    std::map<DonorId, NodeId, std::less<>> donor_index_;
    std::optional<NodeId> root_;
    std::uint32_t next_id_ = 0;
    std::vector<NodeId> slots_;
    std::unordered_map<NodeId, std::size_t> slot_of_;
    std::unordered_set<NodeId> touched_;
};

/// Offline honest build in linear time: every V(N) equals D(N).
DonationTree build_tree(std::span<const DonorRecord> donations, int arity_k, bool allow_negative = false);

/// One honest subtree per nonempty region, all linked under a fresh root.
/// The root may have a single child or more than k children.
DonationTree build_region_forest(std::span<const DonorRecord> donations, std::span<const Money> boundaries,
                                 int arity_k);

}  // namespace donverify
