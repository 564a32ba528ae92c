#include <cmath>

#include "sgc/diffcore.hpp"
#include "sgc/error.hpp"

namespace sgc::inline SGC_PRECISION_TAG {

ad::Var ParameterSet::add(const std::string& name, Tensor init) {
  if (contains(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  items_.push_back({name, ad::leaf(std::move(init))});
  return items_.back().var;
}

ad::Var ParameterSet::add_uniform(const std::string& name, std::size_t rows, std::size_t cols,
                                  std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  Tensor t(rows, cols);
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = static_cast<Real>(rng.uniform(-bound, bound));
  return add(name, std::move(t));
}

ad::Var ParameterSet::get(const std::string& name) const {
  for (const auto& p : items_)
    if (p.name == name) return p.var;
  throw ConfigError("no parameter named '" + name + "'");
}

bool ParameterSet::contains(const std::string& name) const {
  for (const auto& p : items_)
    if (p.name == name) return true;
  return false;
}

void ParameterSet::zero_grad() {
  for (auto& p : items_) p.var.zero_grad();
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : items_) n += p.var.value().size();
  return n;
}

void adam_step(ParameterSet& params, AdamState& state, const OptimizerConfig& config) {
  const auto& items = params.items();
  if (state.m.size() != items.size()) {
    state.m.clear();
    state.v.clear();
    for (const auto& p : items) {
      state.m.emplace_back(p.var.rows(), p.var.cols());
      state.v.emplace_back(p.var.rows(), p.var.cols());
    }
    state.step = 0;
  }
  ++state.step;
  const double lr = config.learning_rate;
  const double b1 = config.beta1, b2 = config.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < items.size(); ++k) {
    ad::Var var = items[k].var;
    Tensor& w = var.mutable_value();
    const Tensor& g = var.node()->grad;
    Tensor& m = state.m[k];
    Tensor& v = state.v[k];
    for (std::size_t q = 0; q < w.size(); ++q) {
      const double gq = g.empty() ? 0.0 : static_cast<double>(g[q]);
      double wq = w[q];
      wq -= lr * config.weight_decay * wq;
      const double mq = b1 * m[q] + (1.0 - b1) * gq;
      const double vq = b2 * v[q] + (1.0 - b2) * gq * gq;
      m[q] = static_cast<Real>(mq);
      v[q] = static_cast<Real>(vq);
      wq -= lr * (mq / c1) / (std::sqrt(vq / c2) + config.epsilon);
      w[q] = static_cast<Real>(wq);
    }
  }
}

void sgd_step(ParameterSet& params, const OptimizerConfig& config) {
  for (const auto& p : params.items()) {
    ad::Var var = p.var;
    Tensor& w = var.mutable_value();
    const Tensor& g = var.node()->grad;
    for (std::size_t q = 0; q < w.size(); ++q) {
      double wq = w[q];
      wq -= config.learning_rate * config.weight_decay * wq;
      if (!g.empty()) wq -= config.learning_rate * g[q];
      w[q] = static_cast<Real>(wq);
    }
  }
}

void Optimizer::step(ParameterSet& params) {
  if (config_.kind == OptimizerKind::adam)
    adam_step(params, state_, config_);
  else
    sgd_step(params, config_);
}

}  // namespace sgc::inline SGC_PRECISION_TAG
