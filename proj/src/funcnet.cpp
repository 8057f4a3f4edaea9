#include "rqf/funcnet.hpp"

#include "rqf/rng.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace rqf {

namespace {

void check_same_shape(const std::vector<DenseLayer>& a,
                      const std::vector<DenseLayer>& b, const char* what) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(what) + ": layer count mismatch");
  }
  for (std::size_t l = 0; l < a.size(); ++l) {
    if (a[l].weight.rows() != b[l].weight.rows() ||
        a[l].weight.cols() != b[l].weight.cols() ||
        a[l].bias.size() != b[l].bias.size()) {
      throw std::invalid_argument(std::string(what) + ": shape mismatch at layer " +
                                  std::to_string(l));
    }
  }
}

}  // namespace

NetworkParams init_network(int input_dim, const std::vector<int>& hidden,
                           int output_dim, Rng& rng) {
  if (input_dim < 1 || output_dim < 1) {
    throw std::invalid_argument("init_network: dims must be >= 1");
  }
  for (int h : hidden) {
    if (h < 1) throw std::invalid_argument("init_network: dims must be >= 1");
  }
  std::vector<int> dims;
  dims.push_back(input_dim);
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(output_dim);

  NetworkParams params;
  params.layers.resize(dims.size() - 1);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    DenseLayer& layer = params.layers[l];
    layer.weight.resize(fan_out, fan_in);
    double* data = layer.weight.data();
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
      data[i] = rng.uniform(-bound, bound);
    }
    layer.bias = Eigen::VectorXd::Zero(fan_out);
  }
  return params;
}

Eigen::MatrixXd forward_batch(const NetworkParams& params,
                              const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                              ForwardCache* cache) {
  if (params.layers.empty()) {
    throw std::invalid_argument("forward: empty network");
  }
  if (inputs.rows() != params.input_dim()) {
    throw std::invalid_argument("forward: input has " +
                                std::to_string(inputs.rows()) +
                                " rows, network expects " +
                                std::to_string(params.input_dim()));
  }
  if (cache) {
    cache->activations.clear();
    cache->activations.reserve(params.layers.size() + 1);
    cache->activations.push_back(inputs);
  }
  Eigen::MatrixXd h = inputs;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const DenseLayer& layer = params.layers[l];
    Eigen::MatrixXd z = (layer.weight * h).colwise() + layer.bias;
    if (l + 1 < params.layers.size()) {
      h = z.array().tanh().matrix();
    } else {
      h = std::move(z);
    }
    if (cache) cache->activations.push_back(h);
  }
  return h;
}

Eigen::VectorXd forward(const NetworkParams& params,
                        const Eigen::Ref<const Eigen::VectorXd>& input) {
  return forward_batch(params, input);
}

Gradients backward_batch(const NetworkParams& params, const ForwardCache& cache,
                         const Eigen::Ref<const Eigen::MatrixXd>& upstream) {
  const std::size_t num_layers = params.layers.size();
  if (cache.activations.size() != num_layers + 1) {
    throw std::invalid_argument("backward: cache does not match network");
  }
  if (upstream.rows() != params.output_dim() ||
      upstream.cols() != cache.activations.front().cols()) {
    throw std::invalid_argument("backward: upstream shape mismatch");
  }

  Gradients grads;
  grads.layers.resize(num_layers);

  // Output layer is linear, so its delta is the upstream itself.
  Eigen::MatrixXd delta = upstream;
  for (std::size_t l = num_layers; l-- > 0;) {
    grads.layers[l].weight.noalias() =
        delta * cache.activations[l].transpose();
    grads.layers[l].bias = delta.rowwise().sum();
    if (l > 0) {
      // tanh'(z) = 1 - tanh(z)^2, and activations[l] stores tanh(z)
      delta = (params.layers[l].weight.transpose() * delta).array() *
              (1.0 - cache.activations[l].array().square());
    }
  }
  return grads;
}

Gradients gradients(const NetworkParams& params,
                    const Eigen::Ref<const Eigen::VectorXd>& input,
                    const Eigen::Ref<const Eigen::VectorXd>& upstream) {
  ForwardCache cache;
  forward_batch(params, input, &cache);
  return backward_batch(params, cache, upstream);
}

AdamState make_adam_state(const NetworkParams& params) {
  AdamState state;
  state.m.layers.resize(params.layers.size());
  state.v.layers.resize(params.layers.size());
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const DenseLayer& layer = params.layers[l];
    state.m.layers[l].weight =
        Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols());
    state.m.layers[l].bias = Eigen::VectorXd::Zero(layer.bias.size());
    state.v.layers[l].weight =
        Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols());
    state.v.layers[l].bias = Eigen::VectorXd::Zero(layer.bias.size());
  }
  return state;
}

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;

template <typename M>
void adam_update(M& param, M& m, M& v, const M& g, double lr, double bc1,
                 double bc2) {
  m = kBeta1 * m + (1.0 - kBeta1) * g;
  v = (kBeta2 * v).array() + (1.0 - kBeta2) * g.array().square();
  param.array() -=
      lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + kEps);
}

}  // namespace

void adam_step(NetworkParams& params, AdamState& state, const Gradients& grads,
               double lr) {
  check_same_shape(params.layers, grads.layers, "adam_step");
  check_same_shape(params.layers, state.m.layers, "adam_step");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.step));
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    adam_update(params.layers[l].weight, state.m.layers[l].weight,
                state.v.layers[l].weight, grads.layers[l].weight, lr, bc1, bc2);
    adam_update(params.layers[l].bias, state.m.layers[l].bias,
                state.v.layers[l].bias, grads.layers[l].bias, lr, bc1, bc2);
  }
}

void soft_update(NetworkParams& target, const NetworkParams& prediction,
                 double tau) {
  if (tau < 0.0 || tau > 1.0) {
    throw std::invalid_argument("soft_update: tau must be in [0, 1]");
  }
  check_same_shape(target.layers, prediction.layers, "soft_update");
  for (std::size_t l = 0; l < target.layers.size(); ++l) {
    target.layers[l].weight =
        tau * prediction.layers[l].weight + (1.0 - tau) * target.layers[l].weight;
    target.layers[l].bias =
        tau * prediction.layers[l].bias + (1.0 - tau) * target.layers[l].bias;
  }
}

namespace {

constexpr char kMagic[4] = {'R', 'Q', 'F', '1'};

void write_u32(std::ostream& out, std::uint32_t v) {
  char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, 4);
}

void write_f64(std::ostream& out, double v) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  char buf[8];
  for (int i = 0; i < 8; ++i)
    buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(buf, 8);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  if (!in) throw CheckpointError("checkpoint truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
  return v;
}

double read_f64(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  if (!in) throw CheckpointError("checkpoint truncated");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i)
    bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_networks(const std::string& path,
                   const std::vector<NetworkParams>& nets) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open checkpoint for writing: " + path);
  out.write(kMagic, 4);
  write_u32(out, static_cast<std::uint32_t>(nets.size()));
  for (const NetworkParams& net : nets) {
    write_u32(out, static_cast<std::uint32_t>(net.layers.size()));
    for (const DenseLayer& layer : net.layers) {
      const auto rows = static_cast<std::uint32_t>(layer.weight.rows());
      const auto cols = static_cast<std::uint32_t>(layer.weight.cols());
      write_u32(out, rows);
      write_u32(out, cols);
      for (std::uint32_t r = 0; r < rows; ++r) {
        for (std::uint32_t c = 0; c < cols; ++c) {
          write_f64(out, layer.weight(r, c));
        }
      }
      for (std::uint32_t r = 0; r < rows; ++r) {
        write_f64(out, layer.bias[r]);
      }
    }
  }
  if (!out) throw CheckpointError("write failed: " + path);
}

std::vector<NetworkParams> load_networks(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || magic[0] != kMagic[0] || magic[1] != kMagic[1] ||
      magic[2] != kMagic[2] || magic[3] != kMagic[3]) {
    throw CheckpointError("bad checkpoint magic in " + path +
                          " (expected RQF1)");
  }
  const std::uint32_t count = read_u32(in);
  std::vector<NetworkParams> nets(count);
  for (std::uint32_t n = 0; n < count; ++n) {
    const std::uint32_t layer_count = read_u32(in);
    if (layer_count == 0) throw CheckpointError("checkpoint network has no layers");
    nets[n].layers.resize(layer_count);
    for (std::uint32_t l = 0; l < layer_count; ++l) {
      const std::uint32_t rows = read_u32(in);
      const std::uint32_t cols = read_u32(in);
      if (rows == 0 || cols == 0) throw CheckpointError("checkpoint layer has zero dim");
      DenseLayer& layer = nets[n].layers[l];
      layer.weight.resize(rows, cols);
      for (std::uint32_t r = 0; r < rows; ++r) {
        for (std::uint32_t c = 0; c < cols; ++c) {
          layer.weight(r, c) = read_f64(in);
        }
      }
      layer.bias.resize(rows);
      for (std::uint32_t r = 0; r < rows; ++r) {
        layer.bias[r] = read_f64(in);
      }
    }
  }
  return nets;
}

}  // namespace rqf
