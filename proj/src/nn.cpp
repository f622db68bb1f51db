#include "cellsched/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>

namespace cellsched {

void Mlp::Grads::zero() {
  for (auto& g : dw) std::fill(g.begin(), g.end(), 0.0);
  for (auto& g : db) std::fill(g.begin(), g.end(), 0.0);
}

void Mlp::Grads::add_scaled(const Grads& other, double scale) {
  for (std::size_t l = 0; l < dw.size(); ++l) {
    for (std::size_t i = 0; i < dw[l].size(); ++i)
      dw[l][i] += scale * other.dw[l][i];
    for (std::size_t i = 0; i < db[l].size(); ++i)
      db[l][i] += scale * other.db[l][i];
  }
}

double Mlp::Grads::squared_norm() const {
  double s = 0.0;
  for (const auto& g : dw)
    for (double v : g) s += v * v;
  for (const auto& g : db)
    for (double v : g) s += v * v;
  return s;
}

void Mlp::Grads::scale(double s) {
  for (auto& g : dw)
    for (double& v : g) v *= s;
  for (auto& g : db)
    for (double& v : g) v *= s;
}

Mlp::Mlp(const std::vector<int>& sizes, std::uint64_t seed) {
  if (sizes.size() < 2) throw ConfigError("Mlp needs at least two layer sizes");
  Rng rng(seed);
  layers_.resize(sizes.size() - 1);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Layer& layer = layers_[l];
    layer.in = sizes[l];
    layer.out = sizes[l + 1];
    if (layer.in < 1 || layer.out < 1)
      throw ConfigError("Mlp layer sizes must be >= 1");
    layer.w.resize(static_cast<std::size_t>(layer.in) * layer.out);
    layer.b.assign(static_cast<std::size_t>(layer.out), 0.0);
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
    for (auto& w : layer.w) w = bound * (2.0 * rng.uniform() - 1.0);
  }
}

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.w.size() + l.b.size();
  return n;
}

void Mlp::forward(const std::vector<double>& in, std::vector<double>& out,
                  Cache* cache) const {
  if (static_cast<int>(in.size()) != input_size())
    throw ContractViolation("Mlp input size mismatch");
  if (cache) {
    cache->act.assign(layers_.size() + 1, {});
    cache->pre.assign(layers_.size(), {});
    cache->act[0] = in;
  }
  std::vector<double> cur = in;
  std::vector<double> next;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    next.assign(static_cast<std::size_t>(layer.out), 0.0);
    for (int o = 0; o < layer.out; ++o) {
      const double* wrow = layer.w.data() + static_cast<std::size_t>(o) * layer.in;
      double acc = layer.b[static_cast<std::size_t>(o)];
      for (int i = 0; i < layer.in; ++i) acc += wrow[i] * cur[static_cast<std::size_t>(i)];
      next[static_cast<std::size_t>(o)] = acc;
    }
    if (cache) cache->pre[l] = next;
    const bool hidden = l + 1 < layers_.size();
    if (hidden) {
      for (auto& v : next) v = v > 0.0 ? v : 0.0;  // rectifier
    }
    if (cache) cache->act[l + 1] = next;
    cur.swap(next);
  }
  out = std::move(cur);
}

double Mlp::forward_scalar(const std::vector<double>& in, Cache* cache) const {
  std::vector<double> out;
  forward(in, out, cache);
  if (out.size() != 1) throw ContractViolation("Mlp output is not scalar");
  return out[0];
}

void Mlp::backward(const Cache& cache, const std::vector<double>& dout,
                   Grads& grads) const {
  std::vector<double> delta = dout;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Layer& layer = layers_[l];
    const bool hidden = l + 1 < layers_.size();
    if (hidden) {
      // gradient through the rectifier
      for (int o = 0; o < layer.out; ++o)
        if (cache.pre[l][static_cast<std::size_t>(o)] <= 0.0)
          delta[static_cast<std::size_t>(o)] = 0.0;
    }
    const auto& input = cache.act[l];
    auto& dw = grads.dw[l];
    auto& db = grads.db[l];
    for (int o = 0; o < layer.out; ++o) {
      const double d = delta[static_cast<std::size_t>(o)];
      if (d != 0.0) {
        double* dwrow = dw.data() + static_cast<std::size_t>(o) * layer.in;
        for (int i = 0; i < layer.in; ++i)
          dwrow[i] += d * input[static_cast<std::size_t>(i)];
      }
      db[static_cast<std::size_t>(o)] += d;
    }
    if (l == 0) break;
    std::vector<double> prev(static_cast<std::size_t>(layer.in), 0.0);
    for (int o = 0; o < layer.out; ++o) {
      const double d = delta[static_cast<std::size_t>(o)];
      if (d == 0.0) continue;
      const double* wrow = layer.w.data() + static_cast<std::size_t>(o) * layer.in;
      for (int i = 0; i < layer.in; ++i)
        prev[static_cast<std::size_t>(i)] += d * wrow[i];
    }
    delta.swap(prev);
  }
}

Mlp::Grads Mlp::make_grads() const {
  Grads g;
  g.dw.resize(layers_.size());
  g.db.resize(layers_.size());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    g.dw[l].assign(layers_[l].w.size(), 0.0);
    g.db[l].assign(layers_[l].b.size(), 0.0);
  }
  return g;
}

void Mlp::apply(const Grads& grads, double scale) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    for (std::size_t i = 0; i < layers_[l].w.size(); ++i)
      layers_[l].w[i] += scale * grads.dw[l][i];
    for (std::size_t i = 0; i < layers_[l].b.size(); ++i)
      layers_[l].b[i] += scale * grads.db[l][i];
  }
}

nlohmann::json Mlp::to_json() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : layers_) {
    layers.push_back({{"in", l.in}, {"out", l.out}, {"w", l.w}, {"b", l.b}});
  }
  return {{"layers", layers}};
}

Mlp Mlp::from_json(const nlohmann::json& j) {
  Mlp net;
  if (!j.contains("layers") || !j.at("layers").is_array() ||
      j.at("layers").empty())
    throw ConfigError("network json: missing layers");
  for (const auto& lj : j.at("layers")) {
    Layer l;
    l.in = lj.at("in").get<int>();
    l.out = lj.at("out").get<int>();
    l.w = lj.at("w").get<std::vector<double>>();
    l.b = lj.at("b").get<std::vector<double>>();
    if (l.in < 1 || l.out < 1 ||
        l.w.size() != static_cast<std::size_t>(l.in) * l.out ||
        l.b.size() != static_cast<std::size_t>(l.out))
      throw ConfigError("network json: layer shape mismatch");
    if (!net.layers_.empty() && net.layers_.back().out != l.in)
      throw ConfigError("network json: consecutive layer sizes incompatible");
    net.layers_.push_back(std::move(l));
  }
  for (const auto& l : net.layers_) {
    for (double v : l.w)
      if (!std::isfinite(v)) throw ConfigError("network json: non-finite weight");
    for (double v : l.b)
      if (!std::isfinite(v)) throw ConfigError("network json: non-finite bias");
  }
  return net;
}

std::vector<double> masked_softmax(const std::vector<double>& logits,
                                   const std::vector<bool>& active,
                                   double mask_penalty) {
  std::vector<double> shifted(logits.size());
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    shifted[i] = logits[i] - (active[i] ? 0.0 : mask_penalty);
    max_logit = std::max(max_logit, shifted[i]);
  }
  double sum = 0.0;
  for (auto& v : shifted) {
    v = std::exp(v - max_logit);
    sum += v;
  }
  for (auto& v : shifted) v /= sum;
  return shifted;
}

double entropy(const std::vector<double>& probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

}  // namespace cellsched
