// Copyright 2026 The spinconv Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SPINCONV_TRAINING_H_
#define SPINCONV_TRAINING_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "spinconv/data.h"
#include "spinconv/layers.h"
#include "spinconv/network.h"
#include "spinconv/tensor.h"

namespace spinconv {

// What one layer needs from its forward pass to run backward, per branch.
template <typename T>
struct LayerCache {
  Tensor<T> input;  // layer input (fc: flattened to [N, d])
  Shape input_shape;
  OrientedConvCache<T> conv;
  std::vector<std::size_t> argmax;
};

// The 2^n activation streams of one training step. Branch b at a split
// layer forks into 2b (kept units) and 2b + 1 (complement); bit j of a final
// branch index, counted from the most significant of n bits, is the sign it
// took at the j-th split layer.
template <typename T>
struct BranchSet {
  std::vector<std::vector<LayerCache<T>>> caches;  // [layer][branch]
  std::vector<Mask> masks;                         // one per dropout layer
  std::vector<std::size_t> dropout_layers;         // their layer indices
  std::vector<Tensor<T>> logits;                   // per final branch
  std::vector<double> losses;                      // per final branch
  std::vector<Tensor<T>> grad_logits;              // d(mean loss)/d(logits)
  std::size_t split_layers = 0;

  std::size_t size() const { return logits.size(); }
};

template <typename T>
struct TrainingForward {
  double loss = 0.0;  // uniform mean of the branch losses
  BranchSet<T> branches;
};

// Runs every branch and returns the averaged loss. Masks are drawn from the
// dropout layers' streams unless `pinned` supplies one per dropout layer.
template <typename T>
TrainingForward<T> forward_training(Network<T>& net, const Tensor<T>& batch,
                                    std::span<const int> labels,
                                    const std::vector<Mask>* pinned = nullptr);

// Gradients of the averaged loss, parallel to net.parameters().
template <typename T>
std::vector<Tensor<T>> backward_training(const Network<T>& net, const BranchSet<T>& branches);

template <typename T>
struct OptimizerState {
  std::vector<Tensor<T>> velocity;  // parallel to the parameter list; lazily zeroed
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 128;
};

// v <- momentum v - lr g; theta <- theta + v. Throws NumericalError naming
// the tensor when a gradient is not finite; parameters are left untouched.
template <typename T>
void sgd_momentum_step(std::span<const ParamRef<T>> params, std::span<const Tensor<T>> grads,
                       OptimizerState<T>& state);

struct InitOptions {
  double weight_std = 0.01;
  double bias = 1.0;
  double prelu_slope = 0.25;
};

// Gaussian weights, constant biases and slopes; orientable convolutions
// draw their filter selection from the network-wide fractions.
template <typename T>
Network<T> init_weights(const NetworkSpec& spec, std::uint64_t seed,
                        const InitOptions& options = {});

// Removes every dropout layer and multiplies the weights of the next
// parametric layer by its keep probability. Throws ConsistencyError on a
// network that is already in inference form.
template <typename T>
Network<T> to_inference(const Network<T>& net);

struct LrSchedule {
  double decay = 0.1;
  std::size_t patience = 2;  // epochs without improvement before decaying
  bool enabled = true;

  double best = 0.0;
  std::size_t stale = 0;
  bool has_best = false;

  // Feeds one monitored loss and returns the learning-rate multiplier.
  double step(double monitored_loss);
};

struct EpochMetrics {
  double loss = 0.0;
  double top1 = 0.0;
  std::size_t steps = 0;
};

struct EpochOptions {
  std::size_t epoch = 0;  // seeds the shuffle
  std::size_t crop = 0;   // center crop size; 0 uses the full image
};

// One pass over the shuffled dataset in mini-batches of state.batch_size.
// Loss and top-1 are sample-weighted running means over the epoch, each
// batch contributing the mean over its branches.
EpochMetrics train_epoch(Network<float>& net, const Dataset& dataset,
                         OptimizerState<float>& state, const EpochOptions& options = {});

}  // namespace spinconv

#endif  // SPINCONV_TRAINING_H_
