#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"
#include "loco/io/config.hpp"
#include "loco/nn/adam.hpp"
#include "loco/nn/mlp.hpp"
#include "loco/rl/nets.hpp"
#include "loco/rl/rollout.hpp"

namespace loco::io {

inline constexpr int kCheckpointFormatVersion = 1;

nlohmann::json mlp_to_json(const nn::Mlp& net);
void mlp_from_json(const nlohmann::json& j, nn::Mlp& net);

nlohmann::json adam_to_json(const nn::Adam& opt);
void adam_from_json(const nlohmann::json& j, nn::Adam& opt);

nlohmann::json sim_state_to_json(const sim::SimState& s);
sim::SimState sim_state_from_json(const nlohmann::json& j);

nlohmann::json env_slot_to_json(const rl::EnvSlot& slot);
// terrain is regenerated from (kind, level, seed) with the given generation
// config rather than stored verbatim
void env_slot_from_json(const nlohmann::json& j, const sim::TerrainConfig& terrain_config,
                        rl::EnvSlot& slot);

nlohmann::json nets_to_json(const rl::PolicyNet& policy, const rl::ValueNet& value,
                            const rl::ContextEstimator& estimator);
void nets_from_json(const nlohmann::json& j, rl::PolicyNet& policy, rl::ValueNet& value,
                    rl::ContextEstimator& estimator);

// throws with a clear message when the file is not a checkpoint of this
// format version
void check_checkpoint_version(const nlohmann::json& j, const std::string& path);

// The inference-side view of a checkpoint: config snapshot plus the three
// networks, enough to run and evaluate a trained controller.
struct PolicyBundle {
  RunConfig config;
  rl::PolicyNet policy;
  rl::ValueNet value;
  rl::ContextEstimator estimator;
  std::int64_t iteration = 0;
};

PolicyBundle load_policy_bundle(const std::string& path);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace loco::io
