#include "sgl/game_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "sgl/errors.hpp"

namespace sgl {

namespace {

using nlohmann::json;

const json& require(const json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) throw ConfigError(std::string("game file is missing key '") + key + "'");
  return doc.at(key);
}

const json& require_array(const json& node, std::size_t size, const std::string& where) {
  if (!node.is_array() || node.size() != size) {
    std::ostringstream msg;
    msg << where << " must be an array of length " << size;
    throw DimensionError(msg.str());
  }
  return node;
}

double require_number(const json& node, const std::string& where) {
  if (!node.is_number()) throw ConfigError(where + " must be a number");
  return node.get<double>();
}

}  // namespace

StochasticGame game_from_json(const json& doc) {
  const json& n_states_node = require(doc, "n_states");
  if (!n_states_node.is_number_integer() || n_states_node.get<long long>() < 1)
    throw ConfigError("n_states must be a positive integer");
  const int n_states = n_states_node.get<int>();

  const json& actions_node = require(doc, "actions");
  if (!actions_node.is_array() || actions_node.empty()) throw ConfigError("actions must be a non-empty array");
  std::vector<int> actions;
  int n_joint = 1;
  for (std::size_t i = 0; i < actions_node.size(); ++i) {
    if (!actions_node[i].is_number_integer() || actions_node[i].get<long long>() < 1) {
      std::ostringstream msg;
      msg << "actions[" << i << "] must be a positive integer";
      throw ConfigError(msg.str());
    }
    actions.push_back(actions_node[i].get<int>());
    n_joint *= actions.back();
  }
  const int n_players = static_cast<int>(actions.size());

  std::vector<double> rewards;
  rewards.reserve(static_cast<std::size_t>(n_players) * n_states * n_joint);
  const json& rewards_node = require_array(require(doc, "rewards"), n_players, "rewards");
  for (int i = 0; i < n_players; ++i) {
    const std::string where_i = "rewards[" + std::to_string(i) + "]";
    const json& per_state = require_array(rewards_node[i], n_states, where_i);
    for (int s = 0; s < n_states; ++s) {
      const std::string where_s = where_i + "[" + std::to_string(s) + "]";
      const json& row = require_array(per_state[s], n_joint, where_s);
      for (int a = 0; a < n_joint; ++a) rewards.push_back(require_number(row[a], where_s + "[" + std::to_string(a) + "]"));
    }
  }

  std::vector<double> transitions;
  transitions.reserve(static_cast<std::size_t>(n_states) * n_joint * n_states);
  const json& trans_node = require_array(require(doc, "transitions"), n_states, "transitions");
  for (int s = 0; s < n_states; ++s) {
    const std::string where_s = "transitions[" + std::to_string(s) + "]";
    const json& per_joint = require_array(trans_node[s], n_joint, where_s);
    for (int a = 0; a < n_joint; ++a) {
      const std::string where_a = where_s + "[" + std::to_string(a) + "]";
      const json& row = require_array(per_joint[a], n_states, where_a);
      for (int n = 0; n < n_states; ++n) transitions.push_back(require_number(row[n], where_a + "[" + std::to_string(n) + "]"));
    }
  }
  return StochasticGame(n_states, std::move(actions), std::move(rewards), std::move(transitions));
}

json game_to_json(const StochasticGame& game, const json& meta) {
  json doc;
  doc["n_states"] = game.num_states();
  doc["actions"] = game.action_counts();
  json rewards = json::array();
  for (int i = 0; i < game.num_players(); ++i) {
    json per_state = json::array();
    for (int s = 0; s < game.num_states(); ++s) {
      json row = json::array();
      for (int a = 0; a < game.num_joint_actions(); ++a) row.push_back(game.reward(i, s, a));
      per_state.push_back(std::move(row));
    }
    rewards.push_back(std::move(per_state));
  }
  doc["rewards"] = std::move(rewards);
  json transitions = json::array();
  for (int s = 0; s < game.num_states(); ++s) {
    json per_joint = json::array();
    for (int a = 0; a < game.num_joint_actions(); ++a) {
      const auto row = game.transition_row(s, a);
      per_joint.push_back(json(std::vector<double>(row.begin(), row.end())));
    }
    transitions.push_back(std::move(per_joint));
  }
  doc["transitions"] = std::move(transitions);
  if (!meta.is_null()) doc["meta"] = meta;
  return doc;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

LoadedGame load_game(const std::filesystem::path& path) {
  const json doc = read_json_file(path);
  StochasticGame game = game_from_json(doc);
  return {std::move(game), doc.value("meta", json())};
}

void save_game(const std::filesystem::path& path, const StochasticGame& game, const json& meta) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << game_to_json(game, meta).dump(2) << "\n";
}

PolicyProfile policy_from_json(const StochasticGame& game, const json& doc) {
  const json& body = doc.is_object() ? require(doc, "policy") : doc;
  const json& players = require_array(body, game.num_players(), "policy");
  PolicyProfile policy;
  for (int i = 0; i < game.num_players(); ++i) {
    const std::string where_i = "policy[" + std::to_string(i) + "]";
    const json& states = require_array(players[i], game.num_states(), where_i);
    Eigen::MatrixXd block(game.num_states(), game.num_actions(i));
    for (int s = 0; s < game.num_states(); ++s) {
      const std::string where_s = where_i + "[" + std::to_string(s) + "]";
      const json& row = require_array(states[s], game.num_actions(i), where_s);
      for (int a = 0; a < game.num_actions(i); ++a) block(s, a) = require_number(row[a], where_s);
    }
    policy.probs.push_back(std::move(block));
  }
  validate_policy(game, policy);
  return policy;
}

json tensor_to_json(const ProfileTensor& tensor) {
  json out = json::array();
  for (const auto& block : tensor) {
    json states = json::array();
    for (Eigen::Index s = 0; s < block.rows(); ++s) {
      json row = json::array();
      for (Eigen::Index a = 0; a < block.cols(); ++a) row.push_back(block(s, a));
      states.push_back(std::move(row));
    }
    out.push_back(std::move(states));
  }
  return out;
}

json policy_to_json(const PolicyProfile& policy) { return json{{"policy", tensor_to_json(policy.probs)}}; }

PolicyProfile load_policy(const StochasticGame& game, const std::filesystem::path& path) {
  return policy_from_json(game, read_json_file(path));
}

std::uint64_t game_hash(const StochasticGame& game) {
  const std::string text = game_to_json(game).dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace sgl
