#include "mmrl/policy.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace mmrl {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                               Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMajor>;
using MapConstMat = Eigen::Map<const RowMajor>;
using MapVec = Eigen::Map<Eigen::VectorXd>;
using MapConstVec = Eigen::Map<const Eigen::VectorXd>;

// Orthogonal(-ish) init: QR of a Gaussian matrix, sign-corrected, scaled.
void orthogonal_init(MapMat w, double gain, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const bool tall = w.rows() >= w.cols();
  Eigen::MatrixXd a(tall ? w.rows() : w.cols(), tall ? w.cols() : w.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() *
                      Eigen::MatrixXd::Identity(a.rows(), a.cols());
  Eigen::MatrixXd r = qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  if (tall)
    w = gain * q;
  else
    w = gain * q.transpose();
}

}  // namespace

PolicyNet::Layout PolicyNet::make_layout(const PolicyConfig& cfg) {
  Layout l{};
  int at = 0;
  l.w1 = at; at += cfg.hidden * cfg.obs_dim;
  l.b1 = at; at += cfg.hidden;
  l.wa = at; at += cfg.head_hidden * cfg.hidden;
  l.ba = at; at += cfg.head_hidden;
  l.wa2 = at; at += cfg.n_actions * cfg.head_hidden;
  l.ba2 = at; at += cfg.n_actions;
  l.wc = at; at += cfg.head_hidden * cfg.hidden;
  l.bc = at; at += cfg.head_hidden;
  l.wc2 = at; at += cfg.head_hidden;
  l.bc2 = at; at += 1;
  l.total = at;
  return l;
}

PolicyNet::PolicyNet(const PolicyConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), layout_(make_layout(cfg)) {
  if (cfg.obs_dim < 1 || cfg.n_actions < 2 || cfg.hidden < 1 ||
      cfg.head_hidden < 1)
    throw std::runtime_error("invalid policy config");
  params_.assign(layout_.total, 0.0);
  std::mt19937_64 rng(seed);
  double* p = params_.data();
  const double root2 = std::sqrt(2.0);
  orthogonal_init(MapMat(p + layout_.w1, cfg.hidden, cfg.obs_dim), root2, rng);
  orthogonal_init(MapMat(p + layout_.wa, cfg.head_hidden, cfg.hidden), root2, rng);
  orthogonal_init(MapMat(p + layout_.wa2, cfg.n_actions, cfg.head_hidden), 0.01, rng);
  orthogonal_init(MapMat(p + layout_.wc, cfg.head_hidden, cfg.hidden), root2, rng);
  orthogonal_init(MapMat(p + layout_.wc2, 1, cfg.head_hidden), 1.0, rng);
}

void PolicyNet::forward(const double* obs, Cache& cache) const {
  const double* p = params_.data();
  MapConstMat w1(p + layout_.w1, cfg_.hidden, cfg_.obs_dim);
  MapConstVec b1(p + layout_.b1, cfg_.hidden);
  MapConstMat wa(p + layout_.wa, cfg_.head_hidden, cfg_.hidden);
  MapConstVec ba(p + layout_.ba, cfg_.head_hidden);
  MapConstMat wa2(p + layout_.wa2, cfg_.n_actions, cfg_.head_hidden);
  MapConstVec ba2(p + layout_.ba2, cfg_.n_actions);
  MapConstMat wc(p + layout_.wc, cfg_.head_hidden, cfg_.hidden);
  MapConstVec bc(p + layout_.bc, cfg_.head_hidden);
  MapConstMat wc2(p + layout_.wc2, 1, cfg_.head_hidden);
  const double bc2 = p[layout_.bc2];

  cache.x = MapConstVec(obs, cfg_.obs_dim);
  cache.h1 = ((w1 * cache.x + b1).array().max(0.0)).matrix();
  cache.ha = ((wa * cache.h1 + ba).array().max(0.0)).matrix();
  cache.logits = wa2 * cache.ha + ba2;
  cache.hc = ((wc * cache.h1 + bc).array().max(0.0)).matrix();
  cache.value = (wc2 * cache.hc)(0) + bc2;

  const double mx = cache.logits.maxCoeff();
  cache.probs = (cache.logits.array() - mx).exp().matrix();
  cache.probs /= cache.probs.sum();
}

std::pair<Eigen::VectorXd, double> PolicyNet::forward(const double* obs) const {
  Cache cache;
  forward(obs, cache);
  return {cache.probs, cache.value};
}

void PolicyNet::backward(const Cache& cache, const Eigen::VectorXd& dlogits,
                         double dvalue, double* grad) const {
  const double* p = params_.data();
  MapConstMat w1(p + layout_.w1, cfg_.hidden, cfg_.obs_dim);
  MapConstMat wa(p + layout_.wa, cfg_.head_hidden, cfg_.hidden);
  MapConstMat wa2(p + layout_.wa2, cfg_.n_actions, cfg_.head_hidden);
  MapConstMat wc(p + layout_.wc, cfg_.head_hidden, cfg_.hidden);
  MapConstMat wc2(p + layout_.wc2, 1, cfg_.head_hidden);

  MapMat g_w1(grad + layout_.w1, cfg_.hidden, cfg_.obs_dim);
  MapVec g_b1(grad + layout_.b1, cfg_.hidden);
  MapMat g_wa(grad + layout_.wa, cfg_.head_hidden, cfg_.hidden);
  MapVec g_ba(grad + layout_.ba, cfg_.head_hidden);
  MapMat g_wa2(grad + layout_.wa2, cfg_.n_actions, cfg_.head_hidden);
  MapVec g_ba2(grad + layout_.ba2, cfg_.n_actions);
  MapMat g_wc(grad + layout_.wc, cfg_.head_hidden, cfg_.hidden);
  MapVec g_bc(grad + layout_.bc, cfg_.head_hidden);
  MapMat g_wc2(grad + layout_.wc2, 1, cfg_.head_hidden);

  // Actor head.
  g_wa2.noalias() += dlogits * cache.ha.transpose();
  g_ba2 += dlogits;
  Eigen::VectorXd dha = wa2.transpose() * dlogits;
  dha = (cache.ha.array() > 0.0).select(dha, 0.0);
  g_wa.noalias() += dha * cache.h1.transpose();
  g_ba += dha;
  Eigen::VectorXd dh1 = wa.transpose() * dha;

  // Critic head.
  g_wc2.noalias() += dvalue * cache.hc.transpose();
  grad[layout_.bc2] += dvalue;
  Eigen::VectorXd dhc = wc2.transpose() * dvalue;
  dhc = (cache.hc.array() > 0.0).select(dhc, 0.0);
  g_wc.noalias() += dhc * cache.h1.transpose();
  g_bc += dhc;
  dh1 += wc.transpose() * dhc;

  // Shared trunk.
  dh1 = (cache.h1.array() > 0.0).select(dh1, 0.0);
  g_w1.noalias() += dh1 * cache.x.transpose();
  g_b1 += dh1;
}

void PolicyNet::save(const std::string& path,
                     const std::map<std::string, std::string>& meta) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "mmrl-checkpoint v1\n";
  for (const auto& [k, v] : meta) out << "meta " << k << " = " << v << "\n";
  out << "config " << cfg_.obs_dim << " " << cfg_.n_actions << " "
      << cfg_.hidden << " " << cfg_.head_hidden << "\n";
  out << "params " << params_.size() << "\n";
  char buf[40];
  for (double v : params_) {
    std::snprintf(buf, sizeof(buf), "%a\n", v);
    out << buf;
  }
}

PolicyNet PolicyNet::load(const std::string& path,
                          std::map<std::string, std::string>* meta) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "mmrl-checkpoint v1")
    throw std::runtime_error(path + ": not a checkpoint file");
  PolicyConfig cfg;
  std::size_t count = 0;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "meta") {
      std::string key, eq;
      ss >> key >> eq;
      std::string value;
      std::getline(ss, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      if (meta) (*meta)[key] = value;
    } else if (tag == "config") {
      ss >> cfg.obs_dim >> cfg.n_actions >> cfg.hidden >> cfg.head_hidden;
    } else if (tag == "params") {
      ss >> count;
      break;
    }
  }
  PolicyNet net(cfg, /*seed=*/0);
  if (count != net.params_.size())
    throw std::runtime_error(path + ": parameter count mismatch");
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line))
      throw std::runtime_error(path + ": truncated checkpoint");
    net.params_[i] = std::strtod(line.c_str(), nullptr);
  }
  return net;
}

AdamOptimizer::AdamOptimizer(int n, double lr, double beta1, double beta2,
                             double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
      m_(n, 0.0), v_(n, 0.0) {}

void AdamOptimizer::step(std::vector<double>& params,
                         const std::vector<double>& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw std::runtime_error("adam: size mismatch");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr_ * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + eps_);
  }
}

}  // namespace mmrl
