#include "donverify/io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace donverify {

namespace {

using json = nlohmann::ordered_json;

json parse_json(std::string_view text, const char* what) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw FormatError(std::string(what) + ": invalid JSON: " + e.what());
    }
}

const json& field(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw FormatError(where + ": missing \"" + key + "\"");
    return *it;
}

Money money_field(const json& obj, const char* key, const std::string& where) {
    const json& v = field(obj, key, where);
    if (!v.is_number_integer()) throw FormatError(where + ": \"" + key + "\" must be an integer amount");
    return Money{v.get<Money::rep>()};
}

std::uint32_t id_value(const json& v, const std::string& where) {
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() > 0xFFFFFFFFULL) {
        throw FormatError(where + ": node id must be a non-negative 32-bit integer");
    }
    return static_cast<std::uint32_t>(v.get<std::uint64_t>());
}

double number_field(const json& obj, const char* key, const std::string& where) {
    const json& v = field(obj, key, where);
    if (!v.is_number()) throw FormatError(where + ": \"" + key + "\" must be a number");
    return v.get<double>();
}

}  // namespace

std::string write_tree(const DonationTree& tree) {
    json doc;
    doc["format_version"] = 1;
    doc["k"] = tree.arity();
    doc["allow_negative"] = tree.allow_negative();
    json nodes = json::array();
    for (const auto& [id, n] : tree.nodes()) {
        json entry;
        entry["id"] = to_index(id);
        entry["parent"] = n.parent ? json(to_index(*n.parent)) : json(nullptr);
        entry["V"] = n.claimed.minor();
        if (n.donor) entry["donor"] = n.donor->id;
        nodes.push_back(std::move(entry));
    }
    doc["nodes"] = std::move(nodes);
    return doc.dump(2) + "\n";
}

DonationTree parse_tree(std::string_view text) {
    const json doc = parse_json(text, "tree file");
    if (!doc.is_object()) throw FormatError("tree file: top level must be an object");
    const json& version = field(doc, "format_version", "tree file");
    if (!version.is_number_integer() || version.get<int>() != 1) throw FormatError("tree file: unsupported format_version");
    const json& k = field(doc, "k", "tree file");
    if (!k.is_number_integer() || k.get<long long>() < 2 || k.get<long long>() > 1'000'000) {
        throw FormatError("tree file: \"k\" must be an integer >= 2");
    }
    bool allow_negative = false;
    if (auto it = doc.find("allow_negative"); it != doc.end()) {
        if (!it->is_boolean()) throw FormatError("tree file: \"allow_negative\" must be a boolean");
        allow_negative = it->get<bool>();
    }
    const json& list = field(doc, "nodes", "tree file");
    if (!list.is_array()) throw FormatError("tree file: \"nodes\" must be an array");

    std::map<NodeId, Node> nodes;
    for (std::size_t i = 0; i < list.size(); ++i) {
        const json& entry = list[i];
        const std::string where = "tree file node #" + std::to_string(i);
        if (!entry.is_object()) throw FormatError(where + ": must be an object");
        const NodeId id{id_value(field(entry, "id", where), where)};
        Node n;
        const json& parent = field(entry, "parent", where);
        if (!parent.is_null()) n.parent = NodeId{id_value(parent, where)};
        n.claimed = money_field(entry, "V", where);
        if (auto d = entry.find("donor"); d != entry.end()) {
            if (!d->is_string() || d->get<std::string>().empty()) {
                throw FormatError(where + ": \"donor\" must be a non-empty string");
            }
            n.donor = DonorRecord{d->get<std::string>(), n.claimed};
        }
        if (n.parent == id) throw StructureError(where + ": node is its own parent");
        if (!nodes.emplace(id, std::move(n)).second) throw StructureError(where + ": duplicate node id");
    }
    for (auto& [id, n] : nodes) {
        if (!n.parent) continue;
        auto p = nodes.find(*n.parent);
        if (p == nodes.end()) throw StructureError("node " + std::to_string(to_index(id)) + " has unknown parent");
        if (p->second.donor) {
            throw StructureError("node " + std::to_string(to_index(p->first)) + " has children and a donor payload");
        }
        p->second.children.push_back(id);
    }
    return DonationTree::from_nodes(k.get<int>(), allow_negative, std::move(nodes));
}

std::string write_donors(std::span<const DonorRecord> donors) {
    json doc = json::array();
    for (const auto& d : donors) doc.push_back(json{{"donor", d.id}, {"amount", d.amount.minor()}});
    return doc.dump(2) + "\n";
}

std::vector<DonorRecord> parse_donors(std::string_view text) {
    const json doc = parse_json(text, "donor file");
    if (!doc.is_array()) throw FormatError("donor file: top level must be an array");
    std::vector<DonorRecord> out;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const json& entry = doc[i];
        const std::string where = "donor record #" + std::to_string(i);
        if (!entry.is_object()) throw FormatError(where + ": must be an object");
        const json& id = field(entry, "donor", where);
        if (!id.is_string() || id.get<std::string>().empty()) throw FormatError(where + ": \"donor\" must be a non-empty string");
        DonorRecord rec{id.get<std::string>(), money_field(entry, "amount", where)};
        if (!seen.insert(rec.id).second) throw FormatError(where + ": duplicate donor '" + rec.id + "'");
        out.push_back(std::move(rec));
    }
    return out;
}

std::string write_cheat_spec(const CheatSpec& spec) {
    json doc;
    json edits = json::array();
    for (const auto& e : spec.edits) edits.push_back(json{{"node", to_index(e.node)}, {"V", e.value.minor()}});
    doc["edits"] = std::move(edits);
    doc["description"] = spec.description;
    return doc.dump(2) + "\n";
}

CheatSpec parse_cheat_spec(std::string_view text) {
    const json doc = parse_json(text, "cheat spec");
    if (!doc.is_object()) throw FormatError("cheat spec: top level must be an object");
    CheatSpec spec;
    if (auto d = doc.find("description"); d != doc.end()) {
        if (!d->is_string()) throw FormatError("cheat spec: \"description\" must be a string");
        spec.description = d->get<std::string>();
    }
    const json& edits = field(doc, "edits", "cheat spec");
    if (!edits.is_array()) throw FormatError("cheat spec: \"edits\" must be an array");
    for (std::size_t i = 0; i < edits.size(); ++i) {
        const std::string where = "cheat edit #" + std::to_string(i);
        if (!edits[i].is_object()) throw FormatError(where + ": must be an object");
        spec.edits.push_back({NodeId{id_value(field(edits[i], "node", where), where)}, money_field(edits[i], "V", where)});
    }
    return spec;
}

std::string write_model(const ParticipationModel& model) {
    json doc;
    if (auto* e = std::get_if<ExponentialModel>(&model)) {
        doc["type"] = "exponential";
        doc["lambda"] = e->lambda;
    } else if (auto* u = std::get_if<UniformModel>(&model)) {
        doc["type"] = "uniform";
        doc["delta"] = u->delta;
    } else {
        const auto& r = std::get<RegionalModel>(model);
        doc["type"] = "regional";
        json b = json::array();
        for (Money m : r.boundaries) b.push_back(m.minor());
        doc["boundaries"] = std::move(b);
        doc["probs"] = r.probs;
    }
    return doc.dump(2) + "\n";
}

ParticipationModel parse_model(std::string_view text) {
    const json doc = parse_json(text, "model config");
    if (!doc.is_object()) throw FormatError("model config: top level must be an object");
    const json& type = field(doc, "type", "model config");
    if (!type.is_string()) throw FormatError("model config: \"type\" must be a string");
    ParticipationModel model;
    const auto kind = type.get<std::string>();
    if (kind == "exponential") {
        model = ExponentialModel{number_field(doc, "lambda", "model config")};
    } else if (kind == "uniform") {
        model = UniformModel{number_field(doc, "delta", "model config")};
    } else if (kind == "regional") {
        RegionalModel r;
        const json& b = field(doc, "boundaries", "model config");
        const json& p = field(doc, "probs", "model config");
        if (!b.is_array() || !p.is_array()) throw FormatError("model config: boundaries and probs must be arrays");
        for (const auto& v : b) {
            if (!v.is_number_integer()) throw FormatError("model config: boundaries must be integer amounts");
            r.boundaries.emplace_back(v.get<Money::rep>());
        }
        for (const auto& v : p) {
            if (!v.is_number()) throw FormatError("model config: probs must be numbers");
            r.probs.push_back(v.get<double>());
        }
        model = std::move(r);
    } else {
        throw FormatError("model config: unknown type '" + kind + "'");
    }
    try {
        validate_model(model);
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("model config: ") + e.what());
    }
    return model;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << contents;
    if (!out.flush()) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace donverify
