#include "donverify/tree.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "donverify/regions.hpp"

namespace donverify {

namespace {

std::string node_name(NodeId id) { return std::to_string(to_index(id)); }

// Number of slots in the complete k-ary layout holding n >= 1 leaves. Growth
// mirrors insert_donation: the next slot either joins a parent that already has
// children, or turns a leaf into a parent and needs a sibling as well.
std::size_t layout_slots(std::size_t leaves, std::size_t k) {
    std::size_t slots = 1;
    for (std::size_t i = 1; i < leaves; ++i) slots += (slots - 1) % k != 0 ? 1 : 2;
    return slots;
}

void sort_ids(std::vector<NodeId>& ids) { std::sort(ids.begin(), ids.end()); }

std::size_t slot_level(std::size_t slot, std::size_t k) {
    std::size_t level = 0;
    while (slot != 0) {
        slot = (slot - 1) / k;
        ++level;
    }
    return level;
}

}  // namespace

DonationTree::DonationTree(int arity_k, bool allow_negative) : arity_(arity_k), allow_negative_(allow_negative) {
    if (arity_k < 2) throw std::invalid_argument("arity must be at least 2");
}

const Node& DonationTree::node(NodeId id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw UnknownNode(id);
    return it->second;
}

Node& DonationTree::mut(NodeId id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw UnknownNode(id);
    return it->second;
}

NodeId DonationTree::new_node(Node node) {
    const NodeId id{next_id_++};
    nodes_.emplace(id, std::move(node));
    return id;
}

NodeId DonationTree::leaf_of(std::string_view donor) const {
    auto it = donor_index_.find(donor);
    if (it == donor_index_.end()) throw UnknownDonor(donor);
    return it->second;
}

std::vector<DonorRecord> DonationTree::donors() const {
    std::vector<DonorRecord> out;
    out.reserve(donor_index_.size());
    for (const auto& [donor, leaf] : donor_index_) out.push_back(*node(leaf).donor);
    return out;
}

void DonationTree::check_record(const DonorRecord& record) const {
    if (record.id.empty()) throw std::invalid_argument("donor id must not be empty");
    if (donor_index_.contains(record.id)) throw DuplicateDonor(record.id);
    if (!allow_negative_ && record.amount < Money{1}) {
        throw std::invalid_argument("donor '" + record.id + "' has non-positive amount " +
                                    std::to_string(record.amount.minor()) + " and negative donations are disabled");
    }
}

NodeId DonationTree::append_layout(std::span<const DonorRecord> records, std::vector<NodeId>& slots) {
    const auto k = static_cast<std::size_t>(arity_);
    const std::size_t total = layout_slots(records.size(), k);
    auto is_internal = [&](std::size_t p) { return k * p + 1 < total; };
    auto first_child = [&](std::size_t p) { return k * p + 1; };
    auto last_child = [&](std::size_t p) { return std::min(k * p + k, total - 1); };

    // Leaf slots in depth-first slot order receive the records in input order.
    std::vector<std::size_t> leaf_slots;
    leaf_slots.reserve(records.size());
    std::vector<std::size_t> stack{0};
    while (!stack.empty()) {
        const std::size_t p = stack.back();
        stack.pop_back();
        if (!is_internal(p)) {
            leaf_slots.push_back(p);
            continue;
        }
        for (std::size_t c = last_child(p) + 1; c-- > first_child(p);) stack.push_back(c);
    }

    std::vector<std::size_t> internal_slots;
    for (std::size_t p = 0; p < total && is_internal(p); ++p) internal_slots.push_back(p);
    std::vector<std::size_t> levels(total, 0);
    for (std::size_t p = 1; p < total; ++p) levels[p] = levels[(p - 1) / k] + 1;
    std::stable_sort(internal_slots.begin(), internal_slots.end(),
                     [&](std::size_t a, std::size_t b) { return levels[a] > levels[b]; });

    slots.assign(total, NodeId{0});
    for (std::size_t i = 0; i < records.size(); ++i) {
        slots[leaf_slots[i]] = new_node(Node{std::nullopt, {}, records[i].amount, records[i]});
    }
    for (std::size_t p : internal_slots) slots[p] = new_node(Node{});

    // Children have larger slots than their parent, so a descending sweep sums bottom-up.
    for (std::size_t p = internal_slots.size(); p-- > 0;) {
        Node& parent = nodes_.at(slots[p]);
        Money sum{};
        for (std::size_t c = first_child(p); c <= last_child(p); ++c) {
            Node& child = nodes_.at(slots[c]);
            child.parent = slots[p];
            parent.children.push_back(slots[c]);
            sum += child.claimed;
        }
        sort_ids(parent.children);
        parent.claimed = sum;
    }
    return slots[0];
}

DonationTree build_tree(std::span<const DonorRecord> donations, int arity_k, bool allow_negative) {
    DonationTree tree(arity_k, allow_negative);
    if (donations.empty()) throw std::invalid_argument("cannot build a tree from an empty donor list");
    for (const auto& record : donations) {
        tree.check_record(record);
        tree.donor_index_.emplace(record.id, NodeId{0});
    }
    tree.donor_index_.clear();
    tree.root_ = tree.append_layout(donations, tree.slots_);
    for (std::size_t s = 0; s < tree.slots_.size(); ++s) {
        const NodeId id = tree.slots_[s];
        tree.slot_of_[id] = s;
        const Node& n = tree.nodes_.at(id);
        if (n.donor) tree.donor_index_.emplace(n.donor->id, id);
    }
    return tree;
}

DonationTree build_region_forest(std::span<const DonorRecord> donations, std::span<const Money> boundaries,
                                 int arity_k) {
    DonationTree tree(arity_k, false);
    if (donations.empty()) throw std::invalid_argument("cannot build a forest from an empty donor list");
    if (boundaries.size() < 2) throw std::invalid_argument("region boundaries need at least two entries");
    std::vector<std::vector<DonorRecord>> regions(boundaries.size() - 1);
    for (const auto& record : donations) {
        tree.check_record(record);
        tree.donor_index_.emplace(record.id, NodeId{0});
        auto region = find_region(boundaries, record.amount);
        if (!region) {
            throw std::invalid_argument("donor '" + record.id + "' amount " + std::to_string(record.amount.minor()) +
                                        " lies outside the region range");
        }
        regions[*region].push_back(record);
    }
    tree.donor_index_.clear();

    std::vector<NodeId> subtree_roots;
    std::vector<NodeId> scratch;
    for (const auto& members : regions) {
        if (members.empty()) continue;
        subtree_roots.push_back(tree.append_layout(members, scratch));
    }
    Node root;
    root.children = subtree_roots;
    sort_ids(root.children);
    for (NodeId child : subtree_roots) root.claimed += tree.nodes_.at(child).claimed;
    const NodeId root_id = tree.new_node(std::move(root));
    for (NodeId child : subtree_roots) tree.nodes_.at(child).parent = root_id;
    tree.root_ = root_id;
    for (const auto& [id, n] : tree.nodes_) {
        if (n.donor) tree.donor_index_.emplace(n.donor->id, id);
    }
    return tree;
}

DonationTree DonationTree::from_nodes(int arity_k, bool allow_negative, std::map<NodeId, Node> nodes) {
    DonationTree tree(arity_k, allow_negative);
    tree.nodes_ = std::move(nodes);
    for (auto& [id, n] : tree.nodes_) sort_ids(n.children);
    for (const auto& [id, n] : tree.nodes_) {
        if (!n.parent) {
            if (tree.root_) throw StructureError("multiple roots: " + node_name(*tree.root_) + " and " + node_name(id));
            tree.root_ = id;
        }
        if (n.donor) {
            if (!tree.donor_index_.emplace(n.donor->id, id).second) throw DuplicateDonor(n.donor->id);
        }
    }
    if (!tree.nodes_.empty()) tree.next_id_ = to_index(tree.nodes_.rbegin()->first) + 1;
    tree.validate();
    tree.recognize_layout();
    return tree;
}

void DonationTree::recognize_layout() {
    slots_.clear();
    slot_of_.clear();
    if (!root_) return;
    const auto k = static_cast<std::size_t>(arity_);
    const std::size_t total = layout_slots(donor_index_.size(), k);
    if (total != nodes_.size()) return;

    // Unordered-tree canonical codes (AHU): two subtrees get the same code iff
    // they are isomorphic ignoring child order.
    std::map<std::vector<std::size_t>, std::size_t> table;
    auto intern = [&](std::vector<std::size_t> child_codes) {
        std::sort(child_codes.begin(), child_codes.end());
        return table.emplace(std::move(child_codes), table.size()).first->second;
    };
    auto first_child = [&](std::size_t p) { return k * p + 1; };
    auto last_child = [&](std::size_t p) { return std::min(k * p + k, total - 1); };
    auto is_internal = [&](std::size_t p) { return k * p + 1 < total; };

    std::vector<std::size_t> slot_code(total);
    for (std::size_t p = total; p-- > 0;) {
        std::vector<std::size_t> codes;
        if (is_internal(p)) {
            for (std::size_t c = first_child(p); c <= last_child(p); ++c) codes.push_back(slot_code[c]);
        }
        slot_code[p] = intern(std::move(codes));
    }

    std::vector<NodeId> order{*root_};
    for (std::size_t i = 0; i < order.size(); ++i) {
        for (NodeId c : nodes_.at(order[i]).children) order.push_back(c);
    }
    std::unordered_map<NodeId, std::size_t> node_code;
    for (std::size_t i = order.size(); i-- > 0;) {
        std::vector<std::size_t> codes;
        for (NodeId c : nodes_.at(order[i]).children) codes.push_back(node_code.at(c));
        node_code[order[i]] = intern(std::move(codes));
    }
    if (node_code.at(*root_) != slot_code[0]) return;

    std::vector<NodeId> slots(total);
    slots[0] = *root_;
    for (std::size_t p = 0; p < total && is_internal(p); ++p) {
        std::multimap<std::size_t, NodeId> pool;
        for (NodeId c : nodes_.at(slots[p]).children) pool.emplace(node_code.at(c), c);
        for (std::size_t c = first_child(p); c <= last_child(p); ++c) {
            auto it = pool.find(slot_code[c]);
            slots[c] = it->second;
            pool.erase(it);
        }
    }
    slots_ = std::move(slots);
    for (std::size_t s = 0; s < slots_.size(); ++s) slot_of_[slots_[s]] = s;
}

void DonationTree::validate() const {
    if (nodes_.empty()) {
        if (root_ || !donor_index_.empty()) throw StructureError("empty tree with a root or donors");
        return;
    }
    if (!root_) throw StructureError("no root (every node has a parent, so the parent links form a cycle)");
    const auto k = static_cast<std::size_t>(arity_);
    for (const auto& [id, n] : nodes_) {
        if (n.parent) {
            auto p = nodes_.find(*n.parent);
            if (p == nodes_.end()) throw StructureError("node " + node_name(id) + " has unknown parent");
            if (std::count(p->second.children.begin(), p->second.children.end(), id) != 1) {
                throw StructureError("node " + node_name(id) + " is not listed exactly once by its parent");
            }
        }
        if (n.donor) {
            if (!n.children.empty()) throw StructureError("internal node " + node_name(id) + " carries a donor");
            auto idx = donor_index_.find(n.donor->id);
            if (idx == donor_index_.end() || idx->second != id) throw StructureError("donor index out of sync");
        } else {
            if (n.children.empty()) throw StructureError("leaf " + node_name(id) + " has no donor");
            const bool is_root = id == *root_;
            if (!is_root && (n.children.size() < 2 || n.children.size() > k)) {
                throw StructureError("internal node " + node_name(id) + " has " + std::to_string(n.children.size()) +
                                     " children (allowed 2.." + std::to_string(k) + ")");
            }
            for (NodeId c : n.children) {
                auto child = nodes_.find(c);
                if (child == nodes_.end()) throw StructureError("node " + node_name(id) + " lists unknown child");
                if (child->second.parent != id) throw StructureError("child " + node_name(c) + " disowns its parent");
            }
        }
    }
    // Reachability from the root rules out cycles and detached components.
    std::set<NodeId> seen;
    std::vector<NodeId> stack{*root_};
    while (!stack.empty()) {
        const NodeId id = stack.back();
        stack.pop_back();
        if (!seen.insert(id).second) throw StructureError("cycle through node " + node_name(id));
        for (NodeId c : nodes_.at(id).children) stack.push_back(c);
    }
    if (seen.size() != nodes_.size()) throw StructureError("tree is not connected (cycle or detached nodes)");
    std::size_t leaves = 0;
    for (const auto& [id, n] : nodes_) leaves += n.donor ? 1 : 0;
    if (leaves != donor_index_.size()) throw StructureError("donor index out of sync");
}

std::size_t DonationTree::depth_of(NodeId id) const {
    std::size_t d = 0;
    for (auto p = node(id).parent; p; p = nodes_.at(*p).parent) ++d;
    return d;
}

std::size_t DonationTree::depth() const {
    if (!root_) return 0;
    if (!slots_.empty()) return slot_level(slots_.size() - 1, static_cast<std::size_t>(arity_));
    std::size_t best = 0;
    std::vector<std::pair<NodeId, std::size_t>> stack{{*root_, 0}};
    while (!stack.empty()) {
        auto [id, d] = stack.back();
        stack.pop_back();
        best = std::max(best, d);
        for (NodeId c : nodes_.at(id).children) stack.emplace_back(c, d + 1);
    }
    return best;
}

std::size_t DonationTree::max_fanout() const {
    std::size_t best = 0;
    for (const auto& [id, n] : nodes_) best = std::max(best, n.children.size());
    return best;
}

Money DonationTree::ground_truth_sum(NodeId id) const {
    Money sum{};
    std::vector<NodeId> stack{id};
    if (!contains(id)) throw UnknownNode(id);
    while (!stack.empty()) {
        const Node& n = nodes_.at(stack.back());
        stack.pop_back();
        if (n.donor) sum += n.donor->amount;
        for (NodeId c : n.children) stack.push_back(c);
    }
    return sum;
}

Money DonationTree::children_sum(NodeId id) const {
    Money sum{};
    for (NodeId c : node(id).children) sum += nodes_.at(c).claimed;
    return sum;
}

Money DonationTree::deficit() const {
    if (!root_) return Money{};
    return ground_truth_sum(*root_) - nodes_.at(*root_).claimed;
}

void DonationTree::set_claim(NodeId id, Money value) { mut(id).claimed = value; }

void DonationTree::set_true_amount(std::string_view donor, Money amount) {
    if (!allow_negative_ && amount < Money{1}) {
        throw std::invalid_argument("donor '" + std::string(donor) + "' amount must be positive");
    }
    mut(leaf_of(donor)).donor->amount = amount;
}

void DonationTree::add_up(std::optional<NodeId> from, Money delta) {
    for (auto id = from; id; id = nodes_.at(*id).parent) {
        nodes_.at(*id).claimed += delta;
        touched_.insert(*id);
    }
}

// Unlinks `child` from its parent; ancestors lose the child's claimed value.
void DonationTree::detach(NodeId child) {
    Node& c = nodes_.at(child);
    const NodeId parent = *c.parent;
    auto& siblings = nodes_.at(parent).children;
    siblings.erase(std::find(siblings.begin(), siblings.end(), child));
    c.parent.reset();
    touched_.insert(child);
    add_up(parent, -c.claimed);
}

// Puts the detached node `new_child` where `old_child` hangs, keeping sibling
// order; ancestors absorb the difference of the two claimed values.
void DonationTree::replace_child(NodeId old_child, NodeId new_child) {
    Node& old_node = nodes_.at(old_child);
    Node& new_node = nodes_.at(new_child);
    new_node.parent = old_node.parent;
    touched_.insert(new_child);
    if (old_node.parent) {
        auto& siblings = nodes_.at(*old_node.parent).children;
        *std::find(siblings.begin(), siblings.end(), old_child) = new_child;
        sort_ids(siblings);
        add_up(old_node.parent, new_node.claimed - old_node.claimed);
    } else {
        root_ = new_child;
    }
    old_node.parent.reset();
}

void DonationTree::insert_donation(DonorRecord record) {
    check_record(record);
    touched_.clear();
    if (nodes_.empty()) {
        const NodeId leaf = new_node(Node{std::nullopt, {}, record.amount, record});
        donor_index_.emplace(record.id, leaf);
        root_ = leaf;
        slots_ = {leaf};
        slot_of_[leaf] = 0;
        touched_.insert(leaf);
        return;
    }
    if (!maintainable()) throw std::logic_error("tree is not in the maintainable layout; rebuild it first");

    const auto k = static_cast<std::size_t>(arity_);
    const std::size_t next = slots_.size();
    const std::size_t parent_slot = (next - 1) / k;
    const Money amount = record.amount;
    const DonorId donor = record.id;
    const NodeId leaf = new_node(Node{std::nullopt, {}, amount, std::move(record)});
    donor_index_.emplace(donor, leaf);
    touched_.insert(leaf);

    if ((next - 1) % k != 0) {
        const NodeId parent = slots_[parent_slot];
        nodes_.at(leaf).parent = parent;
        nodes_.at(parent).children.push_back(leaf);  // fresh ids are the largest
        slots_.push_back(leaf);
        slot_of_[leaf] = next;
        add_up(parent, amount);
        return;
    }

    // The leaf at parent_slot becomes the first child of a new internal node.
    const NodeId displaced = slots_[parent_slot];
    const NodeId branch = new_node(Node{std::nullopt, {}, nodes_.at(displaced).claimed, std::nullopt});
    replace_child(displaced, branch);
    Node& b = nodes_.at(branch);
    b.children = {displaced, leaf};
    b.claimed += amount;
    nodes_.at(displaced).parent = branch;
    nodes_.at(leaf).parent = branch;
    touched_.insert(branch);
    touched_.insert(displaced);
    add_up(nodes_.at(branch).parent, amount);

    slots_[parent_slot] = branch;
    slot_of_[branch] = parent_slot;
    slots_.push_back(displaced);
    slot_of_[displaced] = next;
    slots_.push_back(leaf);
    slot_of_[leaf] = next + 1;
}

void DonationTree::delete_donation(std::string_view donor) {
    const NodeId victim = leaf_of(donor);
    touched_.clear();
    auto forget = [&](NodeId id) {
        if (const Node& n = nodes_.at(id); n.donor) donor_index_.erase(n.donor->id);
        slot_of_.erase(id);
        nodes_.erase(id);
        touched_.insert(id);
    };

    if (nodes_.size() == 1) {
        forget(victim);
        root_.reset();
        slots_.clear();
        return;
    }
    if (!maintainable()) throw std::logic_error("tree is not in the maintainable layout; rebuild it first");

    const auto k = static_cast<std::size_t>(arity_);
    const std::size_t last = slots_.size() - 1;
    const std::size_t parent_slot = (last - 1) / k;
    const std::size_t siblings = last - (k * parent_slot + 1) + 1;
    const NodeId tail = slots_[last];

    // Fill the victim's slot with the tail leaf so only trailing slots disappear.
    auto remove_victim = [&] {
        if (victim == tail) {
            detach(victim);
        } else {
            detach(tail);
            replace_child(victim, tail);
            const std::size_t s = slot_of_.at(victim);
            slots_[s] = tail;
            slot_of_[tail] = s;
        }
        forget(victim);
    };

    if (siblings > 2) {
        remove_victim();
        slots_.pop_back();
        return;
    }

    // The last parent has two children; after the removal its single remaining
    // child moves up into the parent's slot.
    const NodeId parent = slots_[parent_slot];
    const NodeId penultimate = slots_[last - 1];
    if (victim == penultimate) {
        detach(victim);
        forget(victim);
    } else {
        remove_victim();
    }
    const NodeId survivor = nodes_.at(parent).children.front();
    nodes_.at(parent).children.clear();
    nodes_.at(survivor).parent.reset();
    replace_child(parent, survivor);
    forget(parent);
    slots_[parent_slot] = survivor;
    slot_of_[survivor] = parent_slot;
    slots_.resize(last - 1);
}

PathReport DonationTree::verify_donor_path(std::string_view donor, Money claimed_donation) const {
    const NodeId leaf = leaf_of(donor);
    const Node& leaf_node = nodes_.at(leaf);
    PathReport report;
    report.donor = std::string(donor);
    report.claimed_donation = claimed_donation;
    report.leaf_value = leaf_node.claimed;
    report.leaf_ok = leaf_node.claimed == claimed_donation;
    report.steps = 1;
    bool all_ok = report.leaf_ok;
    for (auto id = leaf_node.parent; id; id = nodes_.at(*id).parent) {
        const Node& n = nodes_.at(*id);
        Money sum{};
        for (NodeId c : n.children) sum += nodes_.at(c).claimed;
        report.steps += n.children.size();
        const CheckKind kind = n.claimed == sum ? CheckKind::ok
                               : n.claimed < sum ? CheckKind::under_claim
                                                 : CheckKind::over_claim;
        all_ok = all_ok && kind == CheckKind::ok;
        report.node_checks.push_back(NodeCheck{*id, n.claimed, sum, kind});
    }
    report.is_error = !all_ok;
    return report;
}

std::vector<LeafDiagnosis> DonationTree::diagnose() const {
    std::vector<LeafDiagnosis> out;
    if (!root_) return out;
    struct PathState {
        bool under = false;
        bool over = false;
    };
    std::map<DonorId, LeafDiagnosis> by_donor;
    std::vector<std::pair<NodeId, PathState>> stack{{*root_, {}}};
    while (!stack.empty()) {
        auto [id, state] = stack.back();
        stack.pop_back();
        const Node& n = nodes_.at(id);
        if (n.donor) {
            by_donor.emplace(n.donor->id, LeafDiagnosis{n.donor->id, n.claimed != n.donor->amount, state.under,
                                                        state.over});
            continue;
        }
        Money sum{};
        for (NodeId c : n.children) sum += nodes_.at(c).claimed;
        PathState below{state.under || n.claimed < sum, state.over || n.claimed > sum};
        for (NodeId c : n.children) stack.emplace_back(c, below);
    }
    out.reserve(by_donor.size());
    for (auto& [donor, diag] : by_donor) out.push_back(std::move(diag));
    return out;
}

std::vector<DonorId> DonationTree::error_leaves() const {
    std::vector<DonorId> out;
    for (auto& diag : diagnose()) {
        if (diag.is_error()) out.push_back(std::move(diag.donor));
    }
    return out;
}

bool DonationTree::check_count_lemma() const {
    Money mass{};
    for (const auto& donor : error_leaves()) mass += nodes_.at(donor_index_.find(donor)->second).donor->amount;
    return mass >= deficit();
}

}  // namespace donverify
