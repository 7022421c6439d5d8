#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "loco/io/config.hpp"
#include "loco/rl/estimator.hpp"
#include "loco/rl/ppo.hpp"
#include "loco/rl/rollout.hpp"

namespace loco::rl {

struct TrainingFault : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IterationStats {
  std::int64_t iteration = 0;
  std::int64_t total_steps = 0;
  int episodes_completed = 0;
  double mean_episode_reward = 0.0;  // over episodes completed this iteration
  double mean_episode_length = 0.0;
  std::array<double, task::kNumRewardTerms> reward_term_means{};  // per control step
  PpoReport ppo;
  EstimatorReport estimator;
  double p_boot = 1.0;
  std::array<int, sim::kTerrainLevels> level_histogram{};
};

// The synchronous training loop: collect -> GAE -> policy/critic update ->
// estimator update -> bootstrap update -> (curriculum runs inside the
// rollout). Owns every piece of mutable training state so a checkpoint can
// capture it exactly.
class Trainer {
 public:
  explicit Trainer(io::RunConfig config);

  // restores the complete training state; continuing reproduces an
  // uninterrupted run bit for bit. Overrides (key.path=value) apply to the
  // snapshot config, e.g. to extend `iterations`.
  static std::unique_ptr<Trainer> resume(const std::string& checkpoint_path,
                                         const std::vector<std::string>& overrides = {});

  IterationStats iterate();

  // full loop with CSV logging and periodic checkpoints under out_dir;
  // returns the path of the final checkpoint. on_iteration may be empty.
  std::string run(const std::string& out_dir,
                  const std::function<void(const IterationStats&)>& on_iteration = {});

  void save_checkpoint(const std::string& path) const;

  const io::RunConfig& config() const { return config_; }
  std::int64_t iteration() const { return iteration_; }
  PolicyNet& policy() { return policy_; }
  ValueNet& value() { return value_; }
  ContextEstimator& estimator() { return estimator_; }
  VecEnv& envs() { return *envs_; }

  static std::vector<std::string> csv_columns();
  static std::vector<double> csv_row(const IterationStats& s);

 private:
  void init_networks();
  std::vector<double> episodic_reward_vector() const;

  io::RunConfig config_;
  std::unique_ptr<VecEnv> envs_;
  PolicyNet policy_;
  ValueNet value_;
  ContextEstimator estimator_;
  std::unique_ptr<nn::Adam> policy_opt_;
  std::unique_ptr<nn::Adam> value_opt_;
  std::unique_ptr<nn::Adam> estimator_opt_;
  BootstrapSchedule bootstrap_;
  RolloutBuffer buffer_;
  nn::Rng shuffle_rng_;
  nn::Rng sample_rng_;
  nn::Rng gate_rng_;
  std::int64_t iteration_ = 0;
  std::int64_t total_steps_ = 0;
};

}  // namespace loco::rl
