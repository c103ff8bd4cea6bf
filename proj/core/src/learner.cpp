#include "mmrl/learner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace mmrl {

RolloutBuffer::RolloutBuffer(int obs_dim_, int capacity_)
    : obs_dim(obs_dim_), capacity(capacity_) {
  observations.resize(static_cast<std::size_t>(capacity) * obs_dim);
  actions.resize(capacity);
  log_probs.resize(capacity);
  rewards.resize(capacity);
  values.resize(capacity);
  dones.resize(capacity);
}

void RolloutBuffer::push(const double* obs, int action, double log_prob,
                         double reward, double value, bool done) {
  if (full()) throw std::runtime_error("rollout buffer overflow");
  std::copy(obs, obs + obs_dim,
            observations.begin() + static_cast<std::size_t>(size) * obs_dim);
  actions[size] = action;
  log_probs[size] = log_prob;
  rewards[size] = reward;
  values[size] = value;
  dones[size] = done ? 1 : 0;
  ++size;
}

AdvantageResult kstep_advantages(const RolloutBuffer& buffer, double gamma) {
  AdvantageResult res;
  res.advantages.resize(buffer.size);
  res.returns.resize(buffer.size);
  double g = buffer.bootstrap_value;
  for (int t = buffer.size - 1; t >= 0; --t) {
    g = buffer.rewards[t] + gamma * (buffer.dones[t] ? 0.0 : g);
    res.returns[t] = g;
    res.advantages[t] = g - buffer.values[t];
  }
  return res;
}

AdvantageResult gae_advantages(const RolloutBuffer& buffer, double gamma,
                               double lambda) {
  AdvantageResult res;
  res.advantages.resize(buffer.size);
  res.returns.resize(buffer.size);
  double adv = 0.0;
  double next_value = buffer.bootstrap_value;
  for (int t = buffer.size - 1; t >= 0; --t) {
    const double nonterm = buffer.dones[t] ? 0.0 : 1.0;
    const double delta =
        buffer.rewards[t] + gamma * next_value * nonterm - buffer.values[t];
    adv = delta + gamma * lambda * nonterm * adv;
    res.advantages[t] = adv;
    res.returns[t] = adv + buffer.values[t];
    next_value = buffer.values[t];
  }
  return res;
}

LearnerConfig LearnerConfig::a2c_defaults() {
  LearnerConfig cfg;
  cfg.algo = Algo::A2C;
  cfg.k_steps = 40;
  cfg.normalize_advantages = false;
  return cfg;
}

LearnerConfig LearnerConfig::ppo_defaults() {
  LearnerConfig cfg;
  cfg.algo = Algo::PPO;
  cfg.k_steps = 256;
  cfg.normalize_advantages = true;
  return cfg;
}

namespace {

// Common per-sample machinery: evaluates the minimized objective and the
// upstream logit/value gradients, given a policy-gradient coefficient rule.
template <typename PolicyGradFn>
LossStats batch_loss(const PolicyNet& net, const double* obs,
                     const int* actions, const double* advantages,
                     const double* returns, int n, const LearnerConfig& cfg,
                     std::vector<double>* grad, PolicyGradFn policy_grad) {
  LossStats stats;
  if (grad) {
    grad->assign(net.param_count(), 0.0);
  }
  PolicyNet::Cache cache;
  const int obs_dim = net.config().obs_dim;
  const double inv_n = 1.0 / n;
  for (int t = 0; t < n; ++t) {
    net.forward(obs + static_cast<std::size_t>(t) * obs_dim, cache);
    const int a = actions[t];
    const double logp = std::log(cache.probs(a));
    const double entropy =
        -(cache.probs.array() * cache.probs.array().log()).sum();

    // policy_grad returns {loss contribution, d(loss)/d(logp(a))}.
    auto [pol_loss, dlogp] = policy_grad(t, logp, advantages[t]);
    const double verr = cache.value - returns[t];

    stats.policy += pol_loss * inv_n;
    stats.value += 0.5 * verr * verr * inv_n;
    stats.entropy += entropy * inv_n;

    if (grad) {
      Eigen::VectorXd dlogits =
          cfg.entropy_coef *
          (cache.probs.array() * (cache.probs.array().log() + entropy))
              .matrix();
      // d logp(a) / d logits = onehot(a) - probs.
      dlogits -= dlogp * cache.probs;
      dlogits(a) += dlogp;
      dlogits *= inv_n;
      const double dvalue = cfg.value_coef * verr * inv_n;
      net.backward(cache, dlogits, dvalue, grad->data());
    }
  }
  stats.total = stats.policy + cfg.value_coef * stats.value -
                cfg.entropy_coef * stats.entropy;
  if (!std::isfinite(stats.total))
    throw std::runtime_error("non-finite loss in update");
  return stats;
}

}  // namespace

LossStats a2c_loss(const PolicyNet& net, const double* obs, const int* actions,
                   const double* advantages, const double* returns, int n,
                   const LearnerConfig& cfg, std::vector<double>* grad) {
  return batch_loss(net, obs, actions, advantages, returns, n, cfg, grad,
                    [](int, double logp, double adv) {
                      return std::pair<double, double>{-logp * adv, -adv};
                    });
}

LossStats ppo_loss(const PolicyNet& net, const double* obs, const int* actions,
                   const double* old_log_probs, const double* advantages,
                   const double* returns, int n, const LearnerConfig& cfg,
                   std::vector<double>* grad) {
  const double eps = cfg.clip_epsilon;
  return batch_loss(
      net, obs, actions, advantages, returns, n, cfg, grad,
      [&](int t, double logp, double adv) {
        const double ratio = std::exp(logp - old_log_probs[t]);
        const double unclipped = ratio * adv;
        const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * adv;
        const double surr = std::min(unclipped, clipped);
        const bool off = (adv >= 0.0 && ratio > 1.0 + eps) ||
                         (adv <= 0.0 && ratio < 1.0 - eps);
        return std::pair<double, double>{-surr, off ? 0.0 : -ratio * adv};
      });
}

namespace {

struct Batch {
  std::vector<double> obs;
  std::vector<int> actions;
  std::vector<double> old_log_probs, advantages, returns;
  int n = 0;
};

Batch concat(const std::vector<RolloutBuffer>& buffers,
             const LearnerConfig& cfg) {
  Batch b;
  const int obs_dim = buffers.front().obs_dim;
  for (const RolloutBuffer& buf : buffers) {
    AdvantageResult adv = cfg.algo == LearnerConfig::Algo::A2C
                              ? kstep_advantages(buf, cfg.gamma)
                              : gae_advantages(buf, cfg.gamma, cfg.gae_lambda);
    b.obs.insert(b.obs.end(), buf.observations.begin(),
                 buf.observations.begin() +
                     static_cast<std::size_t>(buf.size) * obs_dim);
    b.actions.insert(b.actions.end(), buf.actions.begin(),
                     buf.actions.begin() + buf.size);
    b.old_log_probs.insert(b.old_log_probs.end(), buf.log_probs.begin(),
                           buf.log_probs.begin() + buf.size);
    b.advantages.insert(b.advantages.end(), adv.advantages.begin(),
                        adv.advantages.end());
    b.returns.insert(b.returns.end(), adv.returns.begin(), adv.returns.end());
    b.n += buf.size;
  }
  if (cfg.normalize_advantages && b.n > 1) {
    double mean = std::accumulate(b.advantages.begin(), b.advantages.end(), 0.0) / b.n;
    double var = 0.0;
    for (double a : b.advantages) var += (a - mean) * (a - mean);
    double sd = std::sqrt(var / b.n) + 1e-8;
    for (double& a : b.advantages) a = (a - mean) / sd;
  }
  return b;
}

void check_finite(const std::vector<double>& grad) {
  for (double g : grad)
    if (!std::isfinite(g))
      throw std::runtime_error("non-finite gradient in update");
}

}  // namespace

LossStats a2c_update(PolicyNet& net, AdamOptimizer& opt,
                     const std::vector<RolloutBuffer>& buffers,
                     const LearnerConfig& cfg) {
  Batch b = concat(buffers, cfg);
  std::vector<double> grad;
  LossStats stats = a2c_loss(net, b.obs.data(), b.actions.data(),
                             b.advantages.data(), b.returns.data(), b.n, cfg,
                             &grad);
  check_finite(grad);
  opt.step(net.params(), grad);
  return stats;
}

LossStats ppo_update(PolicyNet& net, AdamOptimizer& opt,
                     const std::vector<RolloutBuffer>& buffers,
                     const LearnerConfig& cfg, std::mt19937_64& rng) {
  Batch b = concat(buffers, cfg);
  const int obs_dim = net.config().obs_dim;
  std::vector<int> order(b.n);
  std::iota(order.begin(), order.end(), 0);
  const int mb_count = std::max(1, cfg.ppo_minibatches);

  LossStats stats;
  std::vector<double> grad;
  Batch mb;
  for (int epoch = 0; epoch < cfg.ppo_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (int m = 0; m < mb_count; ++m) {
      const int lo = static_cast<int>(static_cast<long>(b.n) * m / mb_count);
      const int hi = static_cast<int>(static_cast<long>(b.n) * (m + 1) / mb_count);
      if (hi <= lo) continue;
      mb.n = hi - lo;
      mb.obs.assign(static_cast<std::size_t>(mb.n) * obs_dim, 0.0);
      mb.actions.resize(mb.n);
      mb.old_log_probs.resize(mb.n);
      mb.advantages.resize(mb.n);
      mb.returns.resize(mb.n);
      for (int i = lo; i < hi; ++i) {
        const int src = order[i];
        const int dst = i - lo;
        std::copy(b.obs.begin() + static_cast<std::size_t>(src) * obs_dim,
                  b.obs.begin() + static_cast<std::size_t>(src + 1) * obs_dim,
                  mb.obs.begin() + static_cast<std::size_t>(dst) * obs_dim);
        mb.actions[dst] = b.actions[src];
        mb.old_log_probs[dst] = b.old_log_probs[src];
        mb.advantages[dst] = b.advantages[src];
        mb.returns[dst] = b.returns[src];
      }
      stats = ppo_loss(net, mb.obs.data(), mb.actions.data(),
                       mb.old_log_probs.data(), mb.advantages.data(),
                       mb.returns.data(), mb.n, cfg, &grad);
      check_finite(grad);
      opt.step(net.params(), grad);
    }
  }
  return stats;
}

int select_action(const PolicyNet& net, const double* obs, bool greedy,
                  std::mt19937_64& rng, double* log_prob, double* value) {
  auto [probs, v] = net.forward(obs);
  int action;
  if (greedy) {
    Eigen::Index idx;
    probs.maxCoeff(&idx);
    action = static_cast<int>(idx);
  } else {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double u = uni(rng);
    double cum = 0.0;
    action = static_cast<int>(probs.size()) - 1;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
      cum += probs(i);
      if (u <= cum) {
        action = static_cast<int>(i);
        break;
      }
    }
  }
  if (log_prob) *log_prob = std::log(probs(action));
  if (value) *value = v;
  return action;
}

TrainResult train(PolicyNet& net, const LearnerConfig& cfg,
                  const EnvFactory& factory,
                  const std::string& checkpoint_path,
                  long checkpoint_every_steps) {
  const int workers = std::max(1, cfg.workers);
  std::vector<std::unique_ptr<Environment>> envs;
  std::vector<std::vector<double>> obs(workers);
  for (int w = 0; w < workers; ++w) {
    envs.push_back(factory(w));
    if (envs[w]->observation_size() != net.config().obs_dim)
      throw std::runtime_error("environment/policy observation size mismatch");
    obs[w] = envs[w]->reset().flatten();
  }

  std::vector<RolloutBuffer> buffers;
  for (int w = 0; w < workers; ++w)
    buffers.emplace_back(net.config().obs_dim, cfg.k_steps);

  AdamOptimizer opt(net.param_count(), cfg.learning_rate);
  std::mt19937_64 rng(cfg.seed);

  TrainResult result;
  std::vector<double> ep_reward(workers, 0.0);
  std::vector<double> completed;
  double last_mean = 0.0;
  long steps = 0;
  long next_checkpoint = checkpoint_every_steps;
  int update = 0;

  while (steps < cfg.total_steps) {
    for (auto& b : buffers) b.clear();
    for (int t = 0; t < cfg.k_steps; ++t) {
      for (int w = 0; w < workers; ++w) {
        double logp = 0.0, value = 0.0;
        // Environment actions are 1-based.
        int a = select_action(net, obs[w].data(), false, rng, &logp, &value) + 1;
        StepResult sr = envs[w]->step(a);
        buffers[w].push(obs[w].data(), a - 1, logp, sr.reward, value, sr.done);
        ep_reward[w] += sr.reward;
        if (sr.done) {
          completed.push_back(ep_reward[w]);
          ep_reward[w] = 0.0;
          obs[w] = envs[w]->reset().flatten();
        } else {
          obs[w] = sr.observation.flatten();
        }
        ++steps;
      }
    }
    for (int w = 0; w < workers; ++w) {
      auto [probs, v] = net.forward(obs[w].data());
      (void)probs;
      buffers[w].bootstrap_value = v;
    }

    LossStats stats = cfg.algo == LearnerConfig::Algo::A2C
                          ? a2c_update(net, opt, buffers, cfg)
                          : ppo_update(net, opt, buffers, cfg, rng);
    ++update;

    if (!completed.empty()) {
      last_mean = std::accumulate(completed.begin(), completed.end(), 0.0) /
                  static_cast<double>(completed.size());
      completed.clear();
    }
    result.log.push_back({update, steps, stats.policy, stats.value,
                          stats.entropy, last_mean});

    if (!checkpoint_path.empty() && checkpoint_every_steps > 0 &&
        steps >= next_checkpoint) {
      net.save(checkpoint_path);
      next_checkpoint += checkpoint_every_steps;
    }
  }
  if (!checkpoint_path.empty()) net.save(checkpoint_path);
  result.steps = steps;
  return result;
}

void write_training_log_csv(const std::vector<TrainLogRow>& log,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "update_idx,steps,policy_loss,value_loss,entropy,mean_episode_reward\n";
  char buf[192];
  for (const TrainLogRow& r : log) {
    std::snprintf(buf, sizeof(buf), "%d,%ld,%.8g,%.8g,%.8g,%.8g\n", r.update,
                  r.steps, r.policy_loss, r.value_loss, r.entropy,
                  r.mean_episode_reward);
    out << buf;
  }
}

}  // namespace mmrl
