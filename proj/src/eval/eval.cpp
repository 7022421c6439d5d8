#include "loco/eval/eval.hpp"

#include <cmath>
#include <cstring>

#include "loco/io/csv.hpp"
#include "loco/sim/math3d.hpp"

namespace loco::eval {

using nn::Rng;

PolicySystem::PolicySystem(const io::PolicyBundle& bundle, sim::TerrainKind kind, int level)
    : setup_(bundle.config.env),
      policy_(bundle.policy),
      estimator_(bundle.estimator),
      kind_(kind),
      level_(level) {
  setup_.noise.enabled = false;
}

std::string PolicySystem::terrain_label() const {
  return std::string(sim::terrain_kind_name(kind_)) + ":" + std::to_string(level_);
}

void PolicySystem::reset(std::uint64_t seed) {
  terrain_ = sim::terrain_generate(kind_, level_, seed, setup_.terrain);
  state_ = sim::env_reset(setup_.robot, terrain_, {}, setup_.pd, setup_.contact);
  prev_action_ = {};
  prev_prev_action_ = {};
  last_z_ = {};
  fresh_ = true;
}

void PolicySystem::push(const sim::Vec3& velocity_body) { sim::apply_push(state_, velocity_body); }

StepInfo PolicySystem::step(const task::Command& command) {
  StepInfo info;
  info.v_true_pre = state_.linear_velocity;

  Rng no_noise(0);
  const task::Observation obs = task::assemble_observation(state_, command, prev_action_,
                                                           setup_.scales, setup_.noise, no_noise);
  if (fresh_) {
    stack_.reset(obs);
    fresh_ = false;
  } else {
    stack_.push(obs);
  }

  std::array<double, rl::kPolicyInputDim> input{};
  std::memcpy(input.data(), obs.data(), sizeof(double) * task::kObservationDim);
  if (estimator_.arch != rl::EstimatorArch::None) {
    const std::vector<double> flat = stack_.flatten();
    std::vector<double> vel(3), mu(16), sigma(16);
    estimator_.encode(flat, vel, mu, sigma);
    for (int k = 0; k < 3; ++k) {
      input[task::kObservationDim + k] = vel[k];
      info.v_est_pre[k] = vel[k];
    }
    if (estimator_.arch == rl::EstimatorArch::ContextVae) {
      // deterministic inference: the latent mean
      for (int k = 0; k < rl::kLatentDim; ++k) {
        input[task::kObservationDim + 3 + k] = mu[k];
        last_z_[k] = mu[k];
      }
    }
  }

  std::array<double, task::kActionDim> mean{};
  policy_.mean(input, mean);
  task::Action action;
  std::copy(mean.begin(), mean.end(), action.begin());

  const sim::SimState before = state_;
  const sim::Vec12 q_des = task::action_to_target(action, setup_.robot, setup_.action);
  sim::env_step(state_, q_des, setup_.robot, setup_.pd, setup_.contact, {}, terrain_);
  last_reward_ = task::compute_reward(before, state_, action, prev_action_, prev_prev_action_,
                                      command, setup_.robot, terrain_, setup_.rewards,
                                      setup_.pd.control_dt());
  prev_prev_action_ = prev_action_;
  prev_action_ = action;

  info.v_xy_after = {state_.linear_velocity[0], state_.linear_velocity[1]};
  info.yaw_rate_after = state_.angular_velocity[2];
  info.fell = state_.fault ||
              std::fabs(sim::roll_of(state_)) > setup_.termination_tilt_rad ||
              std::fabs(sim::pitch_of(state_)) > setup_.termination_tilt_rad ||
              sim::base_height_above_ground(state_, terrain_) < setup_.termination_base_clearance;
  return info;
}

namespace {

std::uint64_t fnv1a(std::uint64_t hash, const void* data, std::size_t bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    hash ^= p[i];
    hash *= 1099511628211ULL;
  }
  return hash;
}

struct ChannelAccumulator {
  double sum = 0.0;
  std::int64_t count = 0;
  void add(double err) {
    sum += err;
    ++count;
  }
  double mean() const { return count ? sum / count : 0.0; }
};

void finalize_channel(AteChannel& ch) {
  double mean = 0.0;
  for (double v : ch.per_seed) mean += v;
  mean = ch.per_seed.empty() ? 0.0 : mean / ch.per_seed.size();
  double var = 0.0;
  for (double v : ch.per_seed) var += (v - mean) * (v - mean);
  var = ch.per_seed.empty() ? 0.0 : var / ch.per_seed.size();
  ch.mean = mean;
  ch.stddev = std::sqrt(var);
}

void mean_std(const std::vector<double>& xs, double& mean, double& std) {
  mean = 0.0;
  for (double x : xs) mean += x;
  mean = xs.empty() ? 0.0 : mean / xs.size();
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  std = xs.empty() ? 0.0 : std::sqrt(var / xs.size());
}

}  // namespace

AteReport ate_eval(LocomotionSystem& system, const AteProtocol& protocol,
                   std::uint64_t base_seed) {
  AteReport report;
  report.duration = protocol.duration;
  const double dt = system.control_dt();
  const int steps = static_cast<int>(protocol.duration / dt);
  const int resample_steps = std::max(1, static_cast<int>(protocol.resample / dt));

  for (int s = 0; s < protocol.seeds; ++s) {
    const std::uint64_t seed = nn::Rng::mix(base_seed, 0xA7E + s);
    report.seeds.push_back(seed);
    Rng cmd_rng(seed);
    system.reset(nn::Rng::mix(seed, 1));

    ChannelAccumulator ax, ay, ayaw;
    task::Command cmd;
    int falls = 0;
    for (int t = 0; t < steps; ++t) {
      if (t % resample_steps == 0) {
        cmd = task::sample_command(cmd_rng, protocol.ranges);
        report.command_hash = fnv1a(report.command_hash, &cmd, sizeof(cmd));
      }
      const StepInfo info = system.step(cmd);
      ax.add(std::fabs(cmd.vx - info.v_xy_after[0]));
      ay.add(std::fabs(cmd.vy - info.v_xy_after[1]));
      ayaw.add(std::fabs(cmd.yaw_rate - info.yaw_rate_after));
      if (info.fell) {
        ++falls;
        system.reset(nn::Rng::mix(seed, 1000 + falls));
      }
    }
    report.falls += falls;
    report.vx.per_seed.push_back(ax.mean());
    report.vy.per_seed.push_back(ay.mean());
    report.yaw.per_seed.push_back(ayaw.mean());
  }
  finalize_channel(report.vx);
  finalize_channel(report.vy);
  finalize_channel(report.yaw);
  return report;
}

void survival_eval(LocomotionSystem& system, const SurvivalProtocol& protocol,
                   std::uint64_t base_seed, RobustnessReport& report) {
  const double dt = system.control_dt();
  const int steps = static_cast<int>(protocol.duration / dt);
  const int resample_steps = std::max(1, static_cast<int>(protocol.resample / dt));

  for (int trial = 0; trial < protocol.trials; ++trial) {
    const std::uint64_t seed = nn::Rng::mix(base_seed, 0x50F + trial);
    Rng cmd_rng(seed);
    system.reset(nn::Rng::mix(seed, 1));
    task::Command cmd;
    double fall_time = protocol.duration;
    for (int t = 0; t < steps; ++t) {
      if (t % resample_steps == 0) cmd = task::sample_command(cmd_rng, protocol.ranges);
      const StepInfo info = system.step(cmd);
      if (info.fell) {
        fall_time = (t + 1) * dt;
        break;
      }
    }
    report.fall_times.push_back(fall_time);
    report.survival_per_trial.push_back(100.0 * fall_time / protocol.duration);
  }
  mean_std(report.survival_per_trial, report.survival_mean, report.survival_std);
}

RobustnessReport robustness_push_test(LocomotionSystem& system, const PushProtocol& push,
                                      const SurvivalProtocol& survival,
                                      std::uint64_t base_seed) {
  RobustnessReport report;
  const double dt = system.control_dt();
  const int trial_steps = static_cast<int>(push.trial_seconds / dt);
  const int push_steps = std::max(1, static_cast<int>(push.interval / dt));
  const int resample_steps = std::max(1, static_cast<int>(push.resample / dt));

  std::vector<double> speeds;
  for (double v = push.sweep_start; v <= push.sweep_max + 1e-9; v += push.sweep_step)
    speeds.push_back(v);
  report.sweep_speeds = speeds;
  report.sweep_survival_fraction.assign(speeds.size(), 0.0);

  for (int s = 0; s < push.seeds; ++s) {
    double seed_max_push = 0.0;
    for (std::size_t vi = 0; vi < speeds.size(); ++vi) {
      const double v_max = speeds[vi];
      int survived = 0;
      for (int trial = 0; trial < push.trials; ++trial) {
        const std::uint64_t seed =
            nn::Rng::mix(base_seed, 0x9D0 + s * 10007 + static_cast<int>(vi) * 101 + trial);
        Rng rng(seed);
        system.reset(nn::Rng::mix(seed, 1));
        task::Command cmd;
        bool alive = true;
        for (int t = 0; t < trial_steps && alive; ++t) {
          if (t % resample_steps == 0) cmd = task::sample_command(rng, push.ranges);
          if (t > 0 && t % push_steps == 0) {
            system.push({rng.uniform(-v_max, v_max), rng.uniform(-v_max, v_max),
                         rng.uniform(-v_max, v_max)});
          }
          alive = !system.step(cmd).fell;
        }
        if (alive) ++survived;
      }
      const double fraction = static_cast<double>(survived) / push.trials;
      report.sweep_survival_fraction[vi] += fraction / push.seeds;
      if (fraction >= 0.5) seed_max_push = v_max;
    }
    report.max_push_per_seed.push_back(seed_max_push);
  }
  mean_std(report.max_push_per_seed, report.max_push_mean, report.max_push_std);

  survival_eval(system, survival, base_seed, report);
  return report;
}

EstimationTrace estimation_error_eval(LocomotionSystem& a, LocomotionSystem& b, double duration,
                                      double resample, std::uint64_t seed,
                                      const task::CommandRanges& ranges) {
  EstimationTrace trace;
  const double dt = a.control_dt();
  const int steps = static_cast<int>(duration / dt);
  const int resample_steps = std::max(1, static_cast<int>(resample / dt));
  Rng cmd_rng(seed);
  a.reset(nn::Rng::mix(seed, 1));
  b.reset(nn::Rng::mix(seed, 1));
  task::Command cmd;
  int falls_a = 0, falls_b = 0;
  for (int t = 0; t < steps; ++t) {
    if (t % resample_steps == 0) cmd = task::sample_command(cmd_rng, ranges);
    const StepInfo ia = a.step(cmd);
    const StepInfo ib = b.step(cmd);
    auto sq = [](const StepInfo& i) {
      double acc = 0.0;
      for (int k = 0; k < 3; ++k) {
        const double d = i.v_est_pre[k] - i.v_true_pre[k];
        acc += d * d;
      }
      return acc;
    };
    trace.time.push_back((t + 1) * dt);
    trace.terrain.push_back(a.terrain_label());
    trace.sq_error_a.push_back(sq(ia));
    trace.sq_error_b.push_back(sq(ib));
    if (ia.fell) a.reset(nn::Rng::mix(seed, 100 + ++falls_a));
    if (ib.fell) b.reset(nn::Rng::mix(seed, 100 + ++falls_b));
  }
  double dummy;
  mean_std(trace.sq_error_a, trace.mean_a, dummy);
  mean_std(trace.sq_error_b, trace.mean_b, dummy);
  return trace;
}

void export_ate_csv(const AteReport& report, const std::string& path) {
  io::CsvWriter csv(path, {"seed", "ate_vx_mps", "ate_vy_mps", "ate_yaw_radps", "falls"});
  for (std::size_t i = 0; i < report.vx.per_seed.size(); ++i) {
    csv.row_mixed({std::to_string(report.seeds[i]), io::format_float(report.vx.per_seed[i]),
                   io::format_float(report.vy.per_seed[i]),
                   io::format_float(report.yaw.per_seed[i]),
                   i == 0 ? std::to_string(report.falls) : "0"});
  }
  if (!report.vx.per_seed.empty()) {
    csv.row_mixed({"mean", io::format_float(report.vx.mean), io::format_float(report.vy.mean),
                   io::format_float(report.yaw.mean), std::to_string(report.falls)});
    csv.row_mixed({"std", io::format_float(report.vx.stddev), io::format_float(report.vy.stddev),
                   io::format_float(report.yaw.stddev), "0"});
  }
}

void export_robustness_csv(const RobustnessReport& report, const std::string& path) {
  io::CsvWriter csv(path, {"metric", "index", "value"});
  for (std::size_t i = 0; i < report.max_push_per_seed.size(); ++i)
    csv.row_mixed({"max_push_mps", std::to_string(i), io::format_float(report.max_push_per_seed[i])});
  if (!report.max_push_per_seed.empty()) {
    csv.row_mixed({"max_push_mps_mean", "-", io::format_float(report.max_push_mean)});
    csv.row_mixed({"max_push_mps_std", "-", io::format_float(report.max_push_std)});
  }
  for (std::size_t i = 0; i < report.survival_per_trial.size(); ++i)
    csv.row_mixed({"survival_pct", std::to_string(i), io::format_float(report.survival_per_trial[i])});
  if (!report.survival_per_trial.empty()) {
    csv.row_mixed({"survival_pct_mean", "-", io::format_float(report.survival_mean)});
    csv.row_mixed({"survival_pct_std", "-", io::format_float(report.survival_std)});
  }
  for (std::size_t i = 0; i < report.fall_times.size(); ++i)
    csv.row_mixed({"fall_time_s", std::to_string(i), io::format_float(report.fall_times[i])});
  for (std::size_t i = 0; i < report.sweep_speeds.size(); ++i)
    csv.row_mixed({"sweep_survival_fraction", io::format_float(report.sweep_speeds[i]),
                   io::format_float(report.sweep_survival_fraction[i])});
}

void export_estimation_csv(const EstimationTrace& trace, const std::string& path) {
  io::CsvWriter csv(path, {"step", "time_s", "terrain", "sq_err_" + trace.label_a,
                           "sq_err_" + trace.label_b});
  for (std::size_t i = 0; i < trace.time.size(); ++i) {
    csv.row_mixed({std::to_string(i), io::format_float(trace.time[i]), trace.terrain[i],
                   io::format_float(trace.sq_error_a[i]), io::format_float(trace.sq_error_b[i])});
  }
}

}  // namespace loco::eval
