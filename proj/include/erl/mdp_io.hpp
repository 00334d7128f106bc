#pragma once

#include "erl/mdp.hpp"

#include "json.hpp"

#include <filesystem>

namespace erl {

/// MDP JSON: {"S", "A", "H", "s1", "rewards": H x S x A, "transitions": H x S x A x S}.
nlohmann::json to_json(const TabularMdp& mdp);
/// Parses and validates; throws ValidationError on malformed or invalid input.
TabularMdp mdp_from_json(const nlohmann::json& doc);

TabularMdp load_mdp(const std::filesystem::path& path);
void save_mdp(const TabularMdp& mdp, const std::filesystem::path& path);

nlohmann::json to_json(const MarkovPolicy& pi);

/// Writes text atomically enough for our purposes: truncate and write.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace erl
