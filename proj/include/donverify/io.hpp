#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "donverify/adversary.hpp"
#include "donverify/participation.hpp"
#include "donverify/tree.hpp"

namespace donverify {

/// Malformed input document (bad JSON, wrong types, missing fields).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Published tree file:
///   {"format_version":1, "k":K, "allow_negative":B,
///    "nodes":[{"id":I, "parent":P|null, "V":AMOUNT, "donor":"ID"}, ...]}
/// Nodes are sorted by id; "donor" appears on leaves only; amounts are integer
/// minor units. The file carries claims only, so a parsed leaf's true amount is
/// set to its published V until set_true_amount says otherwise.
std::string write_tree(const DonationTree& tree);
DonationTree parse_tree(std::string_view text);

/// Donor file: [{"donor":"ID", "amount":AMOUNT}, ...].
std::string write_donors(std::span<const DonorRecord> donors);
std::vector<DonorRecord> parse_donors(std::string_view text);

/// {"edits":[{"node":I, "V":AMOUNT}, ...], "description":"..."}
std::string write_cheat_spec(const CheatSpec& spec);
CheatSpec parse_cheat_spec(std::string_view text);

/// {"type":"exponential","lambda":L} | {"type":"uniform","delta":D}
/// | {"type":"regional","boundaries":[...],"probs":[...]}
std::string write_model(const ParticipationModel& model);
ParticipationModel parse_model(std::string_view text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace donverify
