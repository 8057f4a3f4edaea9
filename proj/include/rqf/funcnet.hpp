#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

namespace rqf {

class Rng;

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

// Feedforward approximator: affine layers with tanh on hidden layers and
// identity on the output. One instance per agent maps an observation to the
// coefficient vector of that state's basis function.
struct NetworkParams {
  std::vector<DenseLayer> layers;

  int input_dim() const {
    return static_cast<int>(layers.front().weight.cols());
  }
  int output_dim() const {
    return static_cast<int>(layers.back().weight.rows());
  }
};

// Parameter-shaped value set (gradients, optimizer moments).
struct Gradients {
  std::vector<DenseLayer> layers;
};

struct AdamState {
  Gradients m;  // first moments
  Gradients v;  // second moments
  long step = 0;
};

// Weights uniform in (-1/sqrt(fan_in), +1/sqrt(fan_in)) drawn in
// column-major storage order, biases zero. Same rng state => bitwise
// identical parameters.
NetworkParams init_network(int input_dim, const std::vector<int>& hidden,
                           int output_dim, Rng& rng);

Eigen::VectorXd forward(const NetworkParams& params,
                        const Eigen::Ref<const Eigen::VectorXd>& input);

// Per-layer activations of a batched forward pass; activations[0] is the
// input block, activations[L] the output.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> activations;
};

// One sample per column. Pass a cache to retain what backward_batch needs.
Eigen::MatrixXd forward_batch(const NetworkParams& params,
                              const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                              ForwardCache* cache = nullptr);

// Exact reverse-mode gradient of sum_k dot(upstream.col(k), output.col(k))
// with respect to every parameter, using the activations cached by
// forward_batch on the same inputs.
Gradients backward_batch(const NetworkParams& params, const ForwardCache& cache,
                         const Eigen::Ref<const Eigen::MatrixXd>& upstream);

// Single-sample convenience: gradient of dot(upstream, forward(params, input)).
Gradients gradients(const NetworkParams& params,
                    const Eigen::Ref<const Eigen::VectorXd>& input,
                    const Eigen::Ref<const Eigen::VectorXd>& upstream);

AdamState make_adam_state(const NetworkParams& params);

// In-place Adam with beta1=0.9, beta2=0.999, eps=1e-8 and bias correction.
void adam_step(NetworkParams& params, AdamState& state, const Gradients& grads,
               double lr);

// target <- tau * prediction + (1 - tau) * target, elementwise.
void soft_update(NetworkParams& target, const NetworkParams& prediction,
                 double tau);

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Little-endian binary checkpoint. Layout: magic "RQF1"; u32 network count;
// per network: u32 layer count; per layer: u32 rows, u32 cols, rows*cols
// f64 weights row-major, rows f64 biases. Round-trips bit-exactly.
void save_networks(const std::string& path,
                   const std::vector<NetworkParams>& nets);
std::vector<NetworkParams> load_networks(const std::string& path);

}  // namespace rqf
