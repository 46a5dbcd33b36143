#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "sgl/game.hpp"

namespace sgl {

// Game file layout:
//   { "n_states": S, "actions": [|A_1|, ...],
//     "rewards": [player][state][joint_action],
//     "transitions": [state][joint_action][next_state],
//     "meta": {...} }               // optional
// Joint actions are flattened with the last player's action fastest.
StochasticGame game_from_json(const nlohmann::json& doc);
nlohmann::json game_to_json(const StochasticGame& game, const nlohmann::json& meta = nullptr);

struct LoadedGame {
  StochasticGame game;
  nlohmann::json meta;
};

LoadedGame load_game(const std::filesystem::path& path);
void save_game(const std::filesystem::path& path, const StochasticGame& game, const nlohmann::json& meta = nullptr);

// Policy file: either a bare nested list [player][state][action] or an
// object with that list under "policy".
PolicyProfile policy_from_json(const StochasticGame& game, const nlohmann::json& doc);
nlohmann::json policy_to_json(const PolicyProfile& policy);
PolicyProfile load_policy(const StochasticGame& game, const std::filesystem::path& path);

nlohmann::json tensor_to_json(const ProfileTensor& tensor);

// FNV-1a over the canonical JSON dump of the game (meta excluded).
std::uint64_t game_hash(const StochasticGame& game);
std::string hex64(std::uint64_t value);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace sgl
