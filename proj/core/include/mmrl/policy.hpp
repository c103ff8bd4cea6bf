#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace mmrl {

struct PolicyConfig {
  int obs_dim = 0;
  int n_actions = 17;
  int hidden = 256;       // shared trunk width
  int head_hidden = 256;  // per-head hidden width
};

/// MLP actor-critic: one shared ReLU layer feeding a ReLU hidden layer per
/// head; actor emits action logits, critic a scalar value. Parameters live
/// in one flat vector so optimizers, checkpoints, and finite-difference
/// checks all see the same layout.
class PolicyNet {
 public:
  PolicyNet(const PolicyConfig& cfg, std::uint64_t seed);

  struct Cache {
    Eigen::VectorXd x, h1, ha, hc, logits, probs;
    double value = 0.0;
  };

  void forward(const double* obs, Cache& cache) const;
  /// Convenience: probabilities and value only.
  std::pair<Eigen::VectorXd, double> forward(const double* obs) const;

  /// Accumulates parameter gradients for upstream gradients w.r.t. the
  /// actor logits and the value output.
  void backward(const Cache& cache, const Eigen::VectorXd& dlogits,
                double dvalue, double* grad) const;

  int param_count() const { return static_cast<int>(params_.size()); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  const PolicyConfig& config() const { return cfg_; }

  /// Text checkpoint with hex-float parameters (bit-exact round trip) and a
  /// free-form metadata echo.
  void save(const std::string& path,
            const std::map<std::string, std::string>& meta = {}) const;
  static PolicyNet load(const std::string& path,
                        std::map<std::string, std::string>* meta = nullptr);

 private:
  // Offsets into the flat parameter vector.
  struct Layout {
    int w1, b1, wa, ba, wa2, ba2, wc, bc, wc2, bc2, total;
  };
  static Layout make_layout(const PolicyConfig& cfg);

  PolicyConfig cfg_;
  Layout layout_;
  std::vector<double> params_;
};

class AdamOptimizer {
 public:
  AdamOptimizer(int n, double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);
  void step(std::vector<double>& params, const std::vector<double>& grad);

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace mmrl
