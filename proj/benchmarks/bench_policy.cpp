#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "mmrl/learner.hpp"
#include "mmrl/policy.hpp"

namespace {

void BM_PolicyForward(benchmark::State& state) {
  mmrl::PolicyConfig cfg;
  cfg.obs_dim = 25 * 29 + 24;
  mmrl::PolicyNet net(cfg, 1);
  std::vector<double> obs(cfg.obs_dim);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : obs) v = normal(rng);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(obs.data()));
}
BENCHMARK(BM_PolicyForward);

void BM_A2CLoss(benchmark::State& state) {
  mmrl::PolicyConfig cfg;
  cfg.obs_dim = 25 * 29 + 24;
  mmrl::PolicyNet net(cfg, 1);
  mmrl::LearnerConfig lc;
  const int n = 40;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> obs(n * cfg.obs_dim), adv(n), ret(n);
  std::vector<int> act(n);
  for (double& v : obs) v = normal(rng);
  for (int t = 0; t < n; ++t) {
    act[t] = t % cfg.n_actions;
    adv[t] = normal(rng);
    ret[t] = normal(rng);
  }
  std::vector<double> grad;
  for (auto _ : state)
    benchmark::DoNotOptimize(mmrl::a2c_loss(net, obs.data(), act.data(),
                                            adv.data(), ret.data(), n, lc,
                                            &grad));
}
BENCHMARK(BM_A2CLoss);

}  // namespace

BENCHMARK_MAIN();
