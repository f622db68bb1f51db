#pragma once

#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <vector>

#include "cellsched/env.hpp"
#include "cellsched/rng.hpp"

namespace cellsched {

// Fully connected network, ReLU hidden layers, identity output. Double
// precision throughout; gradients are computed analytically and verified by
// finite differences in the tests.
class Mlp {
 public:
  struct Layer {
    int in = 0;
    int out = 0;
    std::vector<double> w;  // row-major [out][in]
    std::vector<double> b;
  };

  // Cached per-layer values from one forward pass, enough for backward.
  struct Cache {
    std::vector<std::vector<double>> act;  // act[0] = input, act[L] = output
    std::vector<std::vector<double>> pre;  // pre-activation per layer
  };

  // Gradient buffers with the same shapes as the parameters.
  struct Grads {
    std::vector<std::vector<double>> dw;
    std::vector<std::vector<double>> db;

    void zero();
    void add_scaled(const Grads& other, double scale);
    double squared_norm() const;
    void scale(double s);
  };

  Mlp() = default;
  // sizes = {input, hidden..., output}; scaled uniform fan-in init
  Mlp(const std::vector<int>& sizes, std::uint64_t seed);

  int input_size() const { return layers_.empty() ? 0 : layers_.front().in; }
  int output_size() const { return layers_.empty() ? 0 : layers_.back().out; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }
  std::size_t param_count() const;

  void forward(const std::vector<double>& in, std::vector<double>& out,
               Cache* cache = nullptr) const;
  double forward_scalar(const std::vector<double>& in,
                        Cache* cache = nullptr) const;

  // Accumulates d(objective)/d(params) into grads given d(objective)/d(output).
  void backward(const Cache& cache, const std::vector<double>& dout,
                Grads& grads) const;

  Grads make_grads() const;
  // params += scale * grads
  void apply(const Grads& grads, double scale);

  nlohmann::json to_json() const;
  static Mlp from_json(const nlohmann::json& j);

 private:
  std::vector<Layer> layers_;
};

// Numerically stable masked softmax. Inactive entries get the mask penalty
// subtracted from their logit before the softmax, which drives their
// probability to zero.
std::vector<double> masked_softmax(const std::vector<double>& logits,
                                   const std::vector<bool>& active,
                                   double mask_penalty = 1e9);

// Entropy of a categorical distribution; 0 log 0 := 0.
double entropy(const std::vector<double>& probs);

}  // namespace cellsched
