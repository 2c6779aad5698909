#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "donverify/adversary.hpp"
#include "donverify/io.hpp"
#include "donverify/participation.hpp"
#include "donverify/simulator.hpp"
#include "donverify/tree.hpp"

namespace py = pybind11;
using namespace donverify;

namespace {

using PyDonor = std::pair<std::string, std::int64_t>;

std::vector<DonorRecord> to_records(const std::vector<PyDonor>& donors) {
    std::vector<DonorRecord> out;
    out.reserve(donors.size());
    for (const auto& [id, amount] : donors) out.push_back({id, Money{amount}});
    return out;
}

std::vector<Money> to_money(const std::vector<std::int64_t>& values) {
    return {values.begin(), values.end()};
}

std::vector<std::int64_t> from_money(const std::vector<Money>& values) {
    std::vector<std::int64_t> out;
    for (Money m : values) out.push_back(m.minor());
    return out;
}

std::optional<std::uint32_t> opt_id(const std::optional<NodeId>& id) {
    return id ? std::optional<std::uint32_t>(to_index(*id)) : std::nullopt;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Donation trees: publication, path verification, cheating constructions, detection simulation";

    py::register_exception<UnknownDonor>(m, "UnknownDonorError", PyExc_KeyError);
    py::register_exception<UnknownNode>(m, "UnknownNodeError", PyExc_KeyError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);

    py::class_<NodeCheck>(m, "NodeCheck")
        .def_property_readonly("node", [](const NodeCheck& c) { return to_index(c.node); })
        .def_property_readonly("claimed", [](const NodeCheck& c) { return c.claimed.minor(); })
        .def_property_readonly("children_sum", [](const NodeCheck& c) { return c.children_sum.minor(); })
        .def_property_readonly("kind", [](const NodeCheck& c) {
            switch (c.kind) {
                case CheckKind::ok: return "ok";
                case CheckKind::under_claim: return "under_claim";
                default: return "over_claim";
            }
        })
        .def_property_readonly("ok", &NodeCheck::ok);

    py::class_<PathReport>(m, "PathReport")
        .def_readonly("donor", &PathReport::donor)
        .def_property_readonly("leaf_value", [](const PathReport& r) { return r.leaf_value.minor(); })
        .def_readonly("leaf_ok", &PathReport::leaf_ok)
        .def_readonly("node_checks", &PathReport::node_checks)
        .def_readonly("is_error", &PathReport::is_error)
        .def_readonly("steps", &PathReport::steps);

    py::class_<DonationTree>(m, "DonationTree")
        .def(py::init<int, bool>(), py::arg("k") = 2, py::arg("allow_negative") = false)
        .def_property_readonly("k", &DonationTree::arity)
        .def_property_readonly("allow_negative", &DonationTree::allow_negative)
        .def_property_readonly("root", [](const DonationTree& t) { return opt_id(t.root()); })
        .def_property_readonly("depth", &DonationTree::depth)
        .def_property_readonly("leaf_count", &DonationTree::leaf_count)
        .def_property_readonly("node_count", &DonationTree::node_count)
        .def_property_readonly("last_touched", &DonationTree::last_touched)
        .def("leaf_of", [](const DonationTree& t, const std::string& d) { return to_index(t.leaf_of(d)); })
        .def("claimed", [](const DonationTree& t, std::uint32_t id) { return t.claimed(NodeId{id}).minor(); })
        .def("ground_truth_sum",
             [](const DonationTree& t, std::uint32_t id) { return t.ground_truth_sum(NodeId{id}).minor(); })
        .def("children", [](const DonationTree& t, std::uint32_t id) {
            std::vector<std::uint32_t> out;
            for (NodeId c : t.node(NodeId{id}).children) out.push_back(to_index(c));
            return out;
        })
        .def("parent", [](const DonationTree& t, std::uint32_t id) { return opt_id(t.node(NodeId{id}).parent); })
        .def("insert_donation",
             [](DonationTree& t, const std::string& d, std::int64_t amount) { t.insert_donation({d, Money{amount}}); })
        .def("delete_donation", &DonationTree::delete_donation)
        .def("set_claim", [](DonationTree& t, std::uint32_t id, std::int64_t v) { t.set_claim(NodeId{id}, Money{v}); })
        .def("verify_donor_path",
             [](const DonationTree& t, const std::string& d, std::int64_t claimed) {
                 return t.verify_donor_path(d, Money{claimed});
             })
        .def("error_leaves", &DonationTree::error_leaves)
        .def("deficit", [](const DonationTree& t) { return t.deficit().minor(); })
        .def("check_count_lemma", &DonationTree::check_count_lemma)
        .def("to_json", [](const DonationTree& t) { return write_tree(t); })
        .def_static("from_json", [](const std::string& text) { return parse_tree(text); })
        .def("copy", [](const DonationTree& t) { return DonationTree(t); })
        .def("__eq__", [](const DonationTree& a, const DonationTree& b) { return a == b; });

    m.def("build_tree",
          [](const std::vector<PyDonor>& donors, int k, bool allow_negative) {
              return build_tree(to_records(donors), k, allow_negative);
          },
          py::arg("donors"), py::arg("k") = 2, py::arg("allow_negative") = false);
    m.def("build_region_forest",
          [](const std::vector<PyDonor>& donors, const std::vector<std::int64_t>& boundaries, int k) {
              return build_region_forest(to_records(donors), to_money(boundaries), k);
          },
          py::arg("donors"), py::arg("boundaries"), py::arg("k") = 2);

    m.def("apply_cheat", [](const DonationTree& t, const std::vector<std::pair<std::uint32_t, std::int64_t>>& edits) {
        CheatSpec spec;
        for (auto [node, v] : edits) spec.edits.push_back({NodeId{node}, Money{v}});
        return apply_cheat(t, spec);
    });
    m.def("skim_at", [](const DonationTree& t, std::uint32_t node, std::int64_t amount) {
        return skim_at(t, NodeId{node}, Money{amount});
    });
    m.def("random_skim", [](const DonationTree& t, std::int64_t total, std::uint64_t seed) {
        return random_skim(t, Money{total}, seed);
    });
    m.def(
        "omit_big_donor",
        [](const DonationTree& t, const std::string& donor, bool remove) {
            return omit_big_donor(t, donor, remove ? OmitEncoding::remove_leaf : OmitEncoding::zero_leaf);
        },
        py::arg("tree"), py::arg("donor"), py::arg("remove") = false);
    m.def(
        "negative_pair",
        [](int n, std::int64_t total, int k) {
            auto pair = negative_pair(n, Money{total}, k, true);
            return py::make_tuple(pair.world_a, pair.world_b, pair.distinguishing_donor);
        },
        py::arg("n"), py::arg("M"), py::arg("k") = 2);

    py::class_<ExponentialModel>(m, "ExponentialModel")
        .def(py::init([](double lambda) { return ExponentialModel{lambda}; }), py::arg("lam"))
        .def_readwrite("lam", &ExponentialModel::lambda);
    py::class_<UniformModel>(m, "UniformModel")
        .def(py::init([](double delta) { return UniformModel{delta}; }), py::arg("delta"))
        .def_readwrite("delta", &UniformModel::delta);
    py::class_<RegionalModel>(m, "RegionalModel")
        .def(py::init([](const std::vector<std::int64_t>& b, std::vector<double> p) {
                 return RegionalModel{to_money(b), std::move(p)};
             }),
             py::arg("boundaries"), py::arg("probs"))
        .def_property_readonly("boundaries", [](const RegionalModel& r) { return from_money(r.boundaries); })
        .def_readonly("probs", &RegionalModel::probs);

    m.def("participation_prob",
          [](const ParticipationModel& model, std::int64_t amount) { return participation_prob(model, Money{amount}); });
    m.def("sample_verifiers", [](const ParticipationModel& model, const std::vector<PyDonor>& donors,
                                 std::uint64_t seed) { return sample_verifiers(model, to_records(donors), seed); });
    m.def("make_partition", [](std::int64_t a0, std::int64_t a, double ratio) {
        return from_money(make_partition(Money{a0}, Money{a}, ratio).boundaries);
    });

    py::class_<DetectionEstimate>(m, "DetectionEstimate")
        .def_readonly("trials", &DetectionEstimate::trials)
        .def_readonly("detections", &DetectionEstimate::detections)
        .def_readonly("p_hat", &DetectionEstimate::p_hat)
        .def_readonly("ci_low", &DetectionEstimate::ci_low)
        .def_readonly("ci_high", &DetectionEstimate::ci_high)
        .def_readonly("seed", &DetectionEstimate::seed);

    m.def("run_trial", [](const DonationTree& t, const std::vector<PyDonor>& truth, const ParticipationModel& model,
                          std::uint64_t seed) {
        auto o = run_trial(t, to_records(truth), model, seed);
        return py::make_tuple(o.detected, o.verifier_count, o.detecting_donors);
    });
    m.def("exact_detection", [](const DonationTree& t, const std::vector<PyDonor>& truth,
                                const ParticipationModel& model) { return exact_detection(t, to_records(truth), model); });
    m.def(
        "estimate_detection",
        [](const DonationTree& t, const std::vector<PyDonor>& truth, const ParticipationModel& model,
           std::uint64_t trials, std::uint64_t seed, unsigned threads) {
            return estimate_detection(t, to_records(truth), model, trials, seed, threads);
        },
        py::arg("tree"), py::arg("truth"), py::arg("model"), py::arg("trials"), py::arg("seed"),
        py::arg("threads") = 1);
    m.def("bound_exponential_failure", [](double lambda, double eps, std::int64_t total) {
        return bound_exponential_failure(lambda, eps, Money{total});
    });
    m.def("bound_uniform_detection", [](double delta, double eps, std::int64_t total, std::int64_t a) {
        return bound_uniform_detection(delta, eps, Money{total}, Money{a});
    });
    m.def("bound_regional_failure",
          [](const std::vector<double>& probs, double eps, const std::vector<std::int64_t>& masses, double ratio) {
              return bound_regional_failure(probs, eps, to_money(masses), ratio);
          });
    m.def("epsilon_of", &epsilon_of);
    m.def(
        "simulate_report",
        [](const DonationTree& t, const std::vector<PyDonor>& truth, const ParticipationModel& model,
           std::uint64_t trials, std::uint64_t seed, const std::string& format) {
            const std::vector<SimulationRow> rows{simulate(t, to_records(truth), model, trials, seed)};
            return format == "csv" ? report_csv(rows) : report_json(rows);
        },
        py::arg("tree"), py::arg("truth"), py::arg("model"), py::arg("trials"), py::arg("seed"),
        py::arg("format") = "json");
}
