#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mmrl/environment.hpp"
#include "mmrl/policy.hpp"

namespace mmrl {

/// Fixed-capacity per-worker rollout storage, consumed once per update.
struct RolloutBuffer {
  int obs_dim = 0;
  int capacity = 0;
  int size = 0;
  std::vector<double> observations;  // size x obs_dim, row-major
  std::vector<int> actions;
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<std::uint8_t> dones;
  double bootstrap_value = 0.0;  // V(s_{t+k}) of the state after the buffer

  RolloutBuffer(int obs_dim, int capacity);
  void clear() { size = 0; }
  bool full() const { return size == capacity; }
  void push(const double* obs, int action, double log_prob, double reward,
            double value, bool done);
  const double* obs_row(int t) const { return observations.data() + t * obs_dim; }
};

struct AdvantageResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// Truncated k-step returns: discounted reward tail plus the bootstrap
/// value, minus the baseline; the horizon shrinks toward the buffer end and
/// resets across episode boundaries.
AdvantageResult kstep_advantages(const RolloutBuffer& buffer, double gamma);

/// Generalized advantage estimation with termination masking.
AdvantageResult gae_advantages(const RolloutBuffer& buffer, double gamma,
                               double lambda);

struct LearnerConfig {
  enum class Algo { A2C, PPO };
  Algo algo = Algo::A2C;
  double gamma = 0.99;
  double learning_rate = 3e-4;
  int k_steps = 40;  // 40 (A2C) / 256 (PPO)
  double gae_lambda = 0.97;
  double clip_epsilon = 0.2;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  int workers = 4;
  long total_steps = 1'000'000;
  int ppo_epochs = 4;
  int ppo_minibatches = 4;
  // Standardized advantages for PPO, raw for A2C; both switchable.
  bool normalize_advantages = false;
  std::uint64_t seed = 0;

  static LearnerConfig a2c_defaults();
  static LearnerConfig ppo_defaults();
};

struct LossStats {
  double total = 0.0;
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
};

/// Minimized A2C objective: -logpi(a|s) A - c_e H + c_v 0.5 (V - R)^2,
/// averaged over the batch. When `grad` is non-null it receives the full
/// parameter gradient (overwritten).
LossStats a2c_loss(const PolicyNet& net, const double* obs, const int* actions,
                   const double* advantages, const double* returns, int n,
                   const LearnerConfig& cfg, std::vector<double>* grad);

/// Minimized PPO-clip objective: -min(ratio A, clip(ratio) A) - c_e H
/// + c_v 0.5 (V - R)^2, averaged over the batch.
LossStats ppo_loss(const PolicyNet& net, const double* obs, const int* actions,
                   const double* old_log_probs, const double* advantages,
                   const double* returns, int n, const LearnerConfig& cfg,
                   std::vector<double>* grad);

/// One synchronized A2C gradient step over the workers' buffers.
LossStats a2c_update(PolicyNet& net, AdamOptimizer& opt,
                     const std::vector<RolloutBuffer>& buffers,
                     const LearnerConfig& cfg);

/// Multiple shuffled minibatch epochs of the clipped surrogate.
LossStats ppo_update(PolicyNet& net, AdamOptimizer& opt,
                     const std::vector<RolloutBuffer>& buffers,
                     const LearnerConfig& cfg, std::mt19937_64& rng);

struct TrainLogRow {
  int update = 0;
  long steps = 0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double mean_episode_reward = 0.0;
};

struct TrainResult {
  std::vector<TrainLogRow> log;
  long steps = 0;
};

using EnvFactory = std::function<std::unique_ptr<Environment>(int worker)>;

/// Vectorized-rollout training: N independent environments advanced in
/// lockstep, synchronized updates, seeded determinism. Writes periodic
/// checkpoints when a path is given.
TrainResult train(PolicyNet& net, const LearnerConfig& cfg,
                  const EnvFactory& factory,
                  const std::string& checkpoint_path = {},
                  long checkpoint_every_steps = 0);

void write_training_log_csv(const std::vector<TrainLogRow>& log,
                            const std::string& path);

/// Samples an action from the policy (or argmax when greedy).
int select_action(const PolicyNet& net, const double* obs, bool greedy,
                  std::mt19937_64& rng, double* log_prob = nullptr,
                  double* value = nullptr);

}  // namespace mmrl
