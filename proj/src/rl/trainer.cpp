#include "loco/rl/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "loco/io/checkpoint.hpp"
#include "loco/io/csv.hpp"

namespace loco::rl {

namespace fs = std::filesystem;
using json = nlohmann::json;

Trainer::Trainer(io::RunConfig config) : config_(std::move(config)) {
  const io::ValidationResult v = io::validate_config(config_);
  if (!v.ok()) {
    std::string msg = "invalid config:";
    for (const auto& e : v.errors) msg += "\n  " + e;
    throw std::invalid_argument(msg);
  }
  init_networks();
  envs_ = std::make_unique<VecEnv>(config_.env, config_.ppo.num_envs,
                                   nn::Rng::mix(config_.seed, 0xE17));
  bootstrap_.mode =
      config_.ablation == "full" ? BootstrapMode::Adaptive : BootstrapMode::Always;
  bootstrap_.reward_scale = config_.adaboot_reward_scale;
  bootstrap_.resize(config_.ppo.num_envs);
  shuffle_rng_ = nn::Rng(nn::Rng::mix(config_.seed, 0x5F));
  sample_rng_ = nn::Rng(nn::Rng::mix(config_.seed, 0xA3));
  gate_rng_ = nn::Rng(nn::Rng::mix(config_.seed, 0xB7));
}

void Trainer::init_networks() {
  // one fixed stream per network so every ablation arm starts from the same
  // initial weights
  nn::Rng policy_rng(nn::Rng::mix(config_.seed, 0x01));
  nn::Rng value_rng(nn::Rng::mix(config_.seed, 0x02));
  nn::Rng est_rng(nn::Rng::mix(config_.seed, 0x03));
  policy_ = PolicyNet(policy_rng);
  value_ = ValueNet(value_rng);
  estimator_ = ContextEstimator(est_rng, estimator_arch_from_ablation(config_.ablation));

  const nn::AdamConfig pa{config_.ppo.learning_rate, 0.9, 0.999, 1e-8};
  const nn::AdamConfig ea{config_.estimator.learning_rate, 0.9, 0.999, 1e-8};
  policy_opt_ = std::make_unique<nn::Adam>(policy_.parameters(), pa);
  value_opt_ = std::make_unique<nn::Adam>(value_.parameters(), pa);
  estimator_opt_ = std::make_unique<nn::Adam>(estimator_.parameters(), ea);
}

std::vector<double> Trainer::episodic_reward_vector() const {
  // the most recent completed episode per env; envs that have not finished
  // one yet contribute their running sum
  std::vector<double> r(envs_->size());
  for (int i = 0; i < envs_->size(); ++i) {
    const EnvSlot& s = envs_->slot(i);
    r[i] = s.completed_episode ? s.last_episode_reward : s.episode_reward;
  }
  return r;
}

IterationStats Trainer::iterate() {
  CollectConfig cc;
  cc.horizon = config_.ppo.horizon;
  cc.gamma = config_.ppo.gamma;
  collect_rollouts(*envs_, policy_, value_, estimator_, bootstrap_.gates, cc, buffer_);
  total_steps_ += buffer_.steps();

  prepare_advantages(buffer_, config_.ppo);

  IterationStats stats;
  stats.ppo = ppo_update(buffer_, policy_, value_, *policy_opt_, *value_opt_, config_.ppo,
                         shuffle_rng_);
  if (estimator_.arch != EstimatorArch::None)
    stats.estimator = estimator_update(estimator_, buffer_, *estimator_opt_, config_.estimator,
                                       shuffle_rng_, sample_rng_);

  bootstrap_.update(episodic_reward_vector(), gate_rng_);

  ++iteration_;
  stats.iteration = iteration_;
  stats.total_steps = total_steps_;
  stats.p_boot = bootstrap_.p_boot;
  stats.episodes_completed = static_cast<int>(buffer_.episode_returns_completed.size());
  if (stats.episodes_completed > 0) {
    for (double r : buffer_.episode_returns_completed) stats.mean_episode_reward += r;
    stats.mean_episode_reward /= stats.episodes_completed;
    for (double l : buffer_.episode_lengths_completed) stats.mean_episode_length += l;
    stats.mean_episode_length /= stats.episodes_completed;
  }
  for (int k = 0; k < task::kNumRewardTerms; ++k)
    stats.reward_term_means[k] = buffer_.reward_term_sums[k] / buffer_.steps();
  for (int i = 0; i < envs_->size(); ++i) ++stats.level_histogram[envs_->slot(i).curriculum.level];

  const bool finite = std::isfinite(stats.ppo.policy_loss) &&
                      std::isfinite(stats.ppo.value_loss) &&
                      std::isfinite(stats.estimator.loss_total) && policy_.all_finite() &&
                      value_.all_finite() && estimator_.all_finite();
  if (!finite) throw TrainingFault("non-finite loss or parameters at iteration " +
                                   std::to_string(iteration_));
  return stats;
}

std::vector<std::string> Trainer::csv_columns() {
  std::vector<std::string> cols = {"iteration",        "total_steps",
                                   "episodes",         "mean_episode_reward",
                                   "mean_episode_length"};
  for (const auto& name : task::RewardBreakdown::term_names()) cols.push_back("rew_" + name);
  for (const char* c : {"loss_policy", "loss_value", "entropy", "clip_fraction", "approx_kl",
                        "ppo_epochs", "loss_est", "loss_recon", "loss_kl", "loss_ce", "p_boot"})
    cols.push_back(c);
  for (int l = 0; l < sim::kTerrainLevels; ++l) cols.push_back("level_" + std::to_string(l));
  return cols;
}

std::vector<double> Trainer::csv_row(const IterationStats& s) {
  std::vector<double> row = {static_cast<double>(s.iteration), static_cast<double>(s.total_steps),
                             static_cast<double>(s.episodes_completed), s.mean_episode_reward,
                             s.mean_episode_length};
  for (double t : s.reward_term_means) row.push_back(t);
  row.push_back(s.ppo.policy_loss);
  row.push_back(s.ppo.value_loss);
  row.push_back(s.ppo.entropy);
  row.push_back(s.ppo.clip_fraction);
  row.push_back(s.ppo.approx_kl);
  row.push_back(static_cast<double>(s.ppo.epochs_run));
  row.push_back(s.estimator.loss_est);
  row.push_back(s.estimator.loss_recon);
  row.push_back(s.estimator.loss_kl);
  row.push_back(s.estimator.loss_total);
  row.push_back(s.p_boot);
  for (int h : s.level_histogram) row.push_back(static_cast<double>(h));
  return row;
}

std::string Trainer::run(const std::string& out_dir,
                         const std::function<void(const IterationStats&)>& on_iteration) {
  fs::create_directories(out_dir);
  const std::string log_path = out_dir + "/training.csv";
  // resumed runs append to an existing log
  const bool fresh_log = iteration_ == 0 || !fs::exists(log_path);
  std::unique_ptr<io::CsvWriter> log;
  std::ofstream append_log;
  if (fresh_log) {
    log = std::make_unique<io::CsvWriter>(log_path, csv_columns());
  } else {
    append_log.open(log_path, std::ios::app);
  }
  auto write_row = [&](const std::vector<double>& row) {
    if (log) {
      log->row(row);
      log->flush();
    } else {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) append_log << ',';
        append_log << io::format_float(row[i]);
      }
      append_log << '\n';
      append_log.flush();
    }
  };

  if (iteration_ == 0) save_checkpoint(out_dir + "/checkpoint_initial.json");

  const std::string final_path = out_dir + "/checkpoint_final.json";
  while (iteration_ < config_.iterations) {
    IterationStats stats;
    try {
      stats = iterate();
    } catch (const TrainingFault&) {
      // leave the last periodic checkpoint in place as the recovery point
      throw;
    }
    write_row(csv_row(stats));
    if (on_iteration) on_iteration(stats);
    if (iteration_ % config_.checkpoint_every == 0 || iteration_ == config_.iterations) {
      char name[64];
      std::snprintf(name, sizeof(name), "/checkpoint_%06lld.json",
                    static_cast<long long>(iteration_));
      save_checkpoint(out_dir + name);
    }
  }
  save_checkpoint(final_path);
  return final_path;
}

void Trainer::save_checkpoint(const std::string& path) const {
  json j;
  j["format_version"] = io::kCheckpointFormatVersion;
  j["iteration"] = iteration_;
  j["total_steps"] = total_steps_;
  j["config"] = io::config_to_json(config_);
  j["nets"] = io::nets_to_json(policy_, value_, estimator_);
  j["optimizers"] = {{"policy", io::adam_to_json(*policy_opt_)},
                     {"value", io::adam_to_json(*value_opt_)},
                     {"estimator", io::adam_to_json(*estimator_opt_)}};
  j["rngs"] = {{"shuffle", shuffle_rng_.serialize()},
               {"sample", sample_rng_.serialize()},
               {"gate", gate_rng_.serialize()}};
  j["bootstrap"] = {{"p_boot", bootstrap_.p_boot}, {"gates", bootstrap_.gates}};
  json slots = json::array();
  for (int i = 0; i < envs_->size(); ++i) slots.push_back(io::env_slot_to_json(envs_->slot(i)));
  j["env_slots"] = std::move(slots);
  io::write_json_file(path, j);
}

std::unique_ptr<Trainer> Trainer::resume(const std::string& checkpoint_path,
                                         const std::vector<std::string>& overrides) {
  json j = io::read_json_file(checkpoint_path);
  io::check_checkpoint_version(j, checkpoint_path);
  for (const std::string& o : overrides) io::apply_override(j.at("config"), o);
  auto trainer = std::make_unique<Trainer>(io::config_from_json(j.at("config")));
  trainer->iteration_ = j.at("iteration").get<std::int64_t>();
  trainer->total_steps_ = j.at("total_steps").get<std::int64_t>();
  io::nets_from_json(j.at("nets"), trainer->policy_, trainer->value_, trainer->estimator_);
  // restoring the nets reallocated their parameter tensors; bind fresh
  // optimizers to the new storage before loading the moments
  trainer->policy_opt_ = std::make_unique<nn::Adam>(trainer->policy_.parameters(),
                                                    trainer->policy_opt_->config());
  trainer->value_opt_ = std::make_unique<nn::Adam>(trainer->value_.parameters(),
                                                   trainer->value_opt_->config());
  trainer->estimator_opt_ = std::make_unique<nn::Adam>(trainer->estimator_.parameters(),
                                                       trainer->estimator_opt_->config());
  io::adam_from_json(j.at("optimizers").at("policy"), *trainer->policy_opt_);
  io::adam_from_json(j.at("optimizers").at("value"), *trainer->value_opt_);
  io::adam_from_json(j.at("optimizers").at("estimator"), *trainer->estimator_opt_);
  trainer->shuffle_rng_.deserialize(j.at("rngs").at("shuffle").get<std::string>());
  trainer->sample_rng_.deserialize(j.at("rngs").at("sample").get<std::string>());
  trainer->gate_rng_.deserialize(j.at("rngs").at("gate").get<std::string>());
  trainer->bootstrap_.p_boot = j.at("bootstrap").at("p_boot").get<double>();
  trainer->bootstrap_.gates = j.at("bootstrap").at("gates").get<std::vector<std::uint8_t>>();
  const json& slots = j.at("env_slots");
  if (static_cast<int>(slots.size()) != trainer->envs_->size())
    throw std::runtime_error("checkpoint env count does not match the config");
  for (int i = 0; i < trainer->envs_->size(); ++i)
    io::env_slot_from_json(slots.at(i), trainer->config_.env.terrain,
                           trainer->envs_->slot(i));
  return trainer;
}

}  // namespace loco::rl
