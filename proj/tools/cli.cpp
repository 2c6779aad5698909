#include "cli.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "donverify/adversary.hpp"
#include "donverify/io.hpp"
#include "donverify/rng.hpp"
#include "donverify/simulator.hpp"
#include "donverify/tree.hpp"

namespace donverify::cli {

namespace {

/// Reported with exit code 1.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

const char* kind_name(CheckKind kind) {
    switch (kind) {
        case CheckKind::ok: return "ok";
        case CheckKind::under_claim: return "UNDER-CLAIM";
        case CheckKind::over_claim: return "OVER-CLAIM";
    }
    return "?";
}

struct GenerateArgs {
    std::size_t n = 0;
    std::int64_t max_amount = 0;
    std::string amounts;
    std::string ids;
    std::uint64_t seed = 0;
    int minor_digits = 0;
    std::string out;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
    std::vector<DonorRecord> donors;
    const auto ids = a.ids.empty() ? std::vector<std::string>{} : split_list(a.ids);
    if (!a.amounts.empty()) {
        const auto amounts = split_list(a.amounts);
        if (a.n != 0 && a.n != amounts.size()) throw UsageError("--n disagrees with the number of --amounts");
        for (std::size_t i = 0; i < amounts.size(); ++i) {
            donors.push_back({"", parse_money(amounts[i], a.minor_digits)});
        }
    } else {
        if (a.n < 1) throw UsageError("--n must be at least 1");
        if (a.max_amount < 1) throw UsageError("--a must be at least 1 (or pass --amounts)");
        Rng rng(a.seed);
        for (std::size_t i = 0; i < a.n; ++i) donors.push_back({"", Money{rng.uniform_int(1, a.max_amount)}});
    }
    if (!ids.empty() && ids.size() != donors.size()) throw UsageError("--ids must name every donor");
    for (std::size_t i = 0; i < donors.size(); ++i) donors[i].id = ids.empty() ? "d" + std::to_string(i + 1) : ids[i];
    write_file(a.out, write_donors(donors));
    Money total{};
    for (const auto& d : donors) total += d.amount;
    out << "wrote " << donors.size() << " donors (total " << total << ") to " << a.out << "\n";
    return kOk;
}

int cmd_publish(const std::string& donor_file, int k, bool allow_negative, const std::string& out_path,
                std::ostream& out) {
    const auto donors = parse_donors(read_file(donor_file));
    const auto tree = build_tree(donors, k, allow_negative);
    write_file(out_path, write_tree(tree));
    out << "published " << tree.leaf_count() << " leaves, root V = " << tree.claimed(*tree.root()) << ", depth "
        << tree.depth() << " to " << out_path << "\n";
    return kOk;
}

struct CheatArgs {
    std::string tree;
    std::string spec;
    std::string attack;
    std::string amount;
    std::string donor;
    std::string encoding = "zero";
    std::uint64_t seed = 0;
    int n = 0;
    std::string total;
    int k = 2;
    int minor_digits = 0;
    std::string out;
    std::string out_b;
};

int cmd_cheat(const CheatArgs& a, std::ostream& out) {
    if (a.attack == "negative-pair") {
        if (a.out_b.empty()) throw UsageError("negative-pair writes two files; pass --out-b");
        const auto pair = negative_pair(a.n, parse_money(a.total, a.minor_digits), a.k, true);
        write_file(a.out, write_tree(pair.world_a));
        write_file(a.out_b, write_tree(pair.world_b));
        out << "wrote world A to " << a.out << " and world B to " << a.out_b << " (distinguishing donor "
            << pair.distinguishing_donor << ")\n";
        return kOk;
    }
    if (a.tree.empty()) throw UsageError("--tree is required");
    const auto tree = parse_tree(read_file(a.tree));
    DonationTree result = tree;
    if (!a.spec.empty()) {
        if (!a.attack.empty()) throw UsageError("pass either --spec or --attack, not both");
        result = apply_cheat(tree, parse_cheat_spec(read_file(a.spec)));
    } else if (a.attack == "skim") {
        result = random_skim(tree, parse_money(a.amount, a.minor_digits), a.seed);
    } else if (a.attack == "omit") {
        if (a.encoding != "zero" && a.encoding != "remove") throw UsageError("--encoding must be zero or remove");
        result = omit_big_donor(tree, a.donor, a.encoding == "zero" ? OmitEncoding::zero_leaf : OmitEncoding::remove_leaf);
    } else {
        throw UsageError("pass --spec FILE or --attack skim|omit|negative-pair");
    }
    write_file(a.out, write_tree(result));
    out << "wrote tampered tree to " << a.out << "\n";
    return kOk;
}

int cmd_verify(const std::string& tree_file, const std::string& donor, const std::string& amount, int minor_digits,
               std::ostream& out) {
    const auto tree = parse_tree(read_file(tree_file));
    const Money claimed = parse_money(amount, minor_digits);
    if (!tree.contains_donor(donor)) {
        out << "donor " << donor << ": leaf ABSENT from the published tree\n";
        return kDonorAbsent;
    }
    const auto report = tree.verify_donor_path(donor, claimed);
    out << "donor " << donor << " gave " << format_money(claimed, minor_digits) << "\n";
    out << "  leaf " << to_index(tree.leaf_of(donor)) << ": V=" << format_money(report.leaf_value, minor_digits)
        << (report.leaf_ok ? "  ok" : "  LEAF-MISMATCH") << "\n";
    for (const auto& check : report.node_checks) {
        out << "  node " << to_index(check.node) << ": V=" << format_money(check.claimed, minor_digits)
            << " children=" << format_money(check.children_sum, minor_digits) << "  " << kind_name(check.kind) << "\n";
    }
    out << (report.is_error ? "ERROR" : "OK") << " (" << report.steps << " steps)\n";
    return report.is_error ? kCheatingDetected : kOk;
}

int cmd_audit(const std::string& tree_file, const std::string& truth_file, const std::string& format,
              std::ostream& out) {
    auto tree = parse_tree(read_file(tree_file));
    const auto truth = parse_donors(read_file(truth_file));
    std::set<DonorId> truth_ids;
    for (const auto& d : truth) truth_ids.insert(d.id);
    for (const auto& [donor, leaf] : tree.donor_index()) {
        if (!truth_ids.contains(donor)) throw UsageError("published donor '" + donor + "' is missing from the truth file");
    }
    Money total{};
    std::vector<DonorId> omitted;
    for (const auto& d : truth) {
        total += d.amount;
        if (tree.contains_donor(d.id)) {
            tree.set_true_amount(d.id, d.amount);
        } else {
            omitted.push_back(d.id);
        }
    }

    std::map<DonorId, std::vector<std::string>> kinds;
    for (const auto& diag : tree.diagnose()) {
        if (diag.leaf_mismatch) kinds[diag.donor].push_back("leaf-mismatch");
        if (diag.under_claim_on_path) kinds[diag.donor].push_back("under-claim");
        if (diag.over_claim_on_path) kinds[diag.donor].push_back("over-claim");
    }
    for (const auto& d : omitted) kinds[d].push_back("omitted");

    const Money claimed = tree.empty() ? Money{} : tree.claimed(*tree.root());
    const Money deficit = total - claimed;
    Money mass{};
    for (const auto& d : truth) {
        if (kinds.contains(d.id)) mass += d.amount;
    }
    const bool mass_check = mass >= deficit;
    const double epsilon = total > Money{0} ? deficit.to_double() / total.to_double() : 0.0;

    if (format == "json") {
        nlohmann::ordered_json doc;
        doc["deficit"] = deficit.minor();
        doc["epsilon"] = epsilon;
        doc["total"] = total.minor();
        doc["claimed_total"] = claimed.minor();
        auto detecting = nlohmann::ordered_json::array();
        auto per_donor = nlohmann::ordered_json::array();
        for (const auto& [donor, k] : kinds) {
            detecting.push_back(donor);
            per_donor.push_back({{"donor", donor}, {"kinds", k}});
        }
        doc["detecting"] = std::move(detecting);
        doc["failures"] = std::move(per_donor);
        doc["detecting_mass"] = mass.minor();
        doc["mass_check"] = mass_check;
        out << doc.dump(2) << "\n";
    } else {
        out << "true total:    " << total << "\n";
        out << "claimed total: " << claimed << "\n";
        out << "deficit:       " << deficit << "\n";
        out << "epsilon:       " << format_double(epsilon) << "\n";
        if (kinds.empty()) {
            out << "detecting set: (none) all clear\n";
        } else {
            out << "detecting set:";
            for (const auto& [donor, k] : kinds) out << ' ' << donor;
            out << "\n";
            for (const auto& [donor, k] : kinds) {
                out << "  " << donor << ":";
                for (const auto& name : k) out << ' ' << name;
                out << "\n";
            }
        }
        out << "error mass check: " << (mass_check ? "holds" : "VIOLATED") << " (detecting mass " << mass
            << " vs deficit " << deficit << ")\n";
    }
    return kinds.empty() ? kOk : kCheatingDetected;
}

int cmd_simulate(const std::string& tree_file, const std::string& truth_file, const std::string& model_file,
                 std::uint64_t trials, std::uint64_t seed, unsigned threads, const std::string& format,
                 const std::string& out_path, std::ostream& out) {
    auto tree = parse_tree(read_file(tree_file));
    const auto truth = parse_donors(read_file(truth_file));
    const auto model = parse_model(read_file(model_file));
    for (const auto& d : truth) {
        if (tree.contains_donor(d.id)) tree.set_true_amount(d.id, d.amount);
    }
    if (trials < 1) throw UsageError("--trials must be at least 1");
    const SimulationRow row = simulate(tree, truth, model, trials, seed, threads);
    const std::vector<SimulationRow> rows{row};
    const std::string text = format == "csv" ? report_csv(rows) : report_json(rows);
    if (out_path.empty()) {
        out << text;
    } else {
        write_file(out_path, text);
        out << "exact_p=" << format_double(row.exact_p) << " p_hat=" << format_double(row.estimate.p_hat)
            << " bound_holds=" << (row.bound_holds ? (*row.bound_holds ? "true" : "false") : "n/a") << " -> "
            << out_path << "\n";
    }
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Publish, tamper with, verify and audit donation trees"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Write a donor file");
    generate->add_option("--n", gen.n, "Number of donors");
    generate->add_option("--a", gen.max_amount, "Draw amounts uniformly from [1, a] minor units");
    generate->add_option("--amounts", gen.amounts, "Comma-separated fixed amounts (decimal)");
    generate->add_option("--ids", gen.ids, "Comma-separated donor ids (default d1..dn)");
    generate->add_option("--seed", gen.seed, "Random seed");
    generate->add_option("--minor-digits", gen.minor_digits, "Fraction digits per major unit")->check(CLI::Range(0, 9));
    generate->add_option("--out", gen.out, "Output donor file")->required();

    std::string donor_file, publish_out;
    int publish_k = 2;
    bool allow_negative = false;
    auto* publish = app.add_subcommand("publish", "Build the honest tree and write file F");
    publish->add_option("donors", donor_file, "Donor file")->required();
    publish->add_option("--k", publish_k, "Maximum children per node")->check(CLI::Range(2, 1'000'000));
    publish->add_flag("--allow-negative", allow_negative, "Accept non-positive amounts");
    publish->add_option("--out", publish_out, "Output tree file")->required();

    CheatArgs ch;
    auto* cheat = app.add_subcommand("cheat", "Tamper with a published tree");
    cheat->add_option("tree", ch.tree, "Published tree file");
    cheat->add_option("--spec", ch.spec, "Cheat spec JSON");
    cheat->add_option("--attack", ch.attack, "skim | omit | negative-pair");
    cheat->add_option("--amount", ch.amount, "Skim amount (decimal)");
    cheat->add_option("--donor", ch.donor, "Donor to omit");
    cheat->add_option("--encoding", ch.encoding, "Omission encoding: zero | remove");
    cheat->add_option("--seed", ch.seed, "Random seed");
    cheat->add_option("--n", ch.n, "negative-pair: donor count");
    cheat->add_option("--M", ch.total, "negative-pair: mass of the positive donors (decimal)");
    cheat->add_option("--k", ch.k, "negative-pair: arity")->check(CLI::Range(2, 1'000'000));
    cheat->add_option("--minor-digits", ch.minor_digits, "Fraction digits per major unit")->check(CLI::Range(0, 9));
    cheat->add_option("--out", ch.out, "Output tree file")->required();
    cheat->add_option("--out-b", ch.out_b, "negative-pair: output file for world B");

    std::string verify_tree, verify_donor, verify_amount;
    int verify_digits = 0;
    auto* verify = app.add_subcommand("verify", "Check one donor's leaf and path");
    verify->add_option("tree", verify_tree, "Published tree file")->required();
    verify->add_option("donor", verify_donor, "Donor id")->required();
    verify->add_option("amount", verify_amount, "Amount the donor gave (decimal)")->required();
    verify->add_option("--minor-digits", verify_digits, "Fraction digits per major unit")->check(CLI::Range(0, 9));

    std::string audit_tree, audit_truth, audit_format = "text";
    auto* audit = app.add_subcommand("audit", "Compare a published tree against the true donor list");
    audit->add_option("tree", audit_tree, "Published tree file")->required();
    audit->add_option("truth", audit_truth, "Donor file with true amounts")->required();
    audit->add_option("--format", audit_format, "text | json")->check(CLI::IsMember({"text", "json"}));

    std::string sim_tree, sim_truth, sim_model, sim_format = "json", sim_out;
    std::uint64_t sim_trials = 10000, sim_seed = 0;
    unsigned sim_threads = 1;
    auto* sim = app.add_subcommand("simulate", "Exact vs Monte Carlo detection probability and bounds");
    sim->add_option("tree", sim_tree, "Published tree file")->required();
    sim->add_option("truth", sim_truth, "Donor file with true amounts")->required();
    sim->add_option("--model", sim_model, "Participation model JSON")->required();
    sim->add_option("--trials", sim_trials, "Monte Carlo trials");
    sim->add_option("--seed", sim_seed, "Master seed");
    sim->add_option("--threads", sim_threads, "Worker threads (result is independent of this)");
    sim->add_option("--format", sim_format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
    sim->add_option("--out", sim_out, "Report file (default stdout)");

    // CLI11 consumes a reversed argument list without the program name.
    std::vector<std::string> reversed;
    if (!args.empty()) reversed.assign(args.rbegin(), args.rend() - 1);
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        for (auto* sub : app.get_subcommands()) err << sub->help();
        return kUsageOrFormat;
    }

    try {
        if (*generate) return cmd_generate(gen, out);
        if (*publish) return cmd_publish(donor_file, publish_k, allow_negative, publish_out, out);
        if (*cheat) return cmd_cheat(ch, out);
        if (*verify) return cmd_verify(verify_tree, verify_donor, verify_amount, verify_digits, out);
        if (*audit) return cmd_audit(audit_tree, audit_truth, audit_format, out);
        if (*sim) {
            return cmd_simulate(sim_tree, sim_truth, sim_model, sim_trials, sim_seed, sim_threads, sim_format, sim_out,
                                out);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kUsageOrFormat;
    }
    return kUsageOrFormat;
}

}  // namespace donverify::cli
