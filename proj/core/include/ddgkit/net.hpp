#pragma once

#include <Eigen/Core>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ddgkit/rng.hpp"

namespace ddgkit {

// Exact (erf-based) GELU and its first two derivatives. The second
// derivative is needed when differentiating a directional derivative of
// the energy with respect to parameters (score-matching training).
double gelu(double x);
double gelu_prime(double x);
double gelu_second(double x);

struct DenseLayer {
  Eigen::MatrixXd w;  // out x in
  Eigen::VectorXd b;  // out
};

// y = W x + b. Throws NumericError on dimension mismatch.
Eigen::VectorXd dense_forward(const DenseLayer& layer,
                              const Eigen::VectorXd& x);

// Dense layers with GELU between them (no activation after the last).
// A single layer is therefore purely affine.
struct MlpStack {
  std::vector<DenseLayer> layers;

  int in_dim() const;
  int out_dim() const;
};

// Forward record for reverse passes over one input vector.
struct MlpTrace {
  bool recorded = false;
  Eigen::VectorXd input;
  std::vector<Eigen::VectorXd> pre;   // pre-activation per layer
  std::vector<Eigen::VectorXd> post;  // post-activation per layer (last == output)
};

Eigen::VectorXd mlp_forward(const MlpStack& net, const Eigen::VectorXd& x,
                            MlpTrace* trace = nullptr);

struct MlpGrads {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;

  void init_like(const MlpStack& net);
  void set_zero();
};

// Reverse pass. Accumulates parameter gradients into `grads` (may be
// null) and returns the gradient with respect to the input. Requires a
// trace recorded by mlp_forward for the same input.
Eigen::VectorXd mlp_backward(const MlpStack& net, const MlpTrace& trace,
                             const Eigen::VectorXd& out_grad, MlpGrads* grads);

// Tangent (directional-derivative) record alongside an MlpTrace.
struct MlpTangentTrace {
  Eigen::VectorXd input_dot;
  std::vector<Eigen::VectorXd> pre_dot;
  std::vector<Eigen::VectorXd> post_dot;
};

// Jacobian-vector product: d(output)/d(input) applied to x_dot, with
// parameters held fixed. Records intermediates for the second-order
// reverse pass below.
Eigen::VectorXd mlp_forward_tangent(const MlpStack& net, const MlpTrace& trace,
                                    const Eigen::VectorXd& x_dot,
                                    MlpTangentTrace* tangent);

// Reverse pass over the pair (value, tangent) channels. Given adjoints
// of the output value and output tangent, accumulates parameter
// gradients from both channels and returns (input adjoint, input-tangent
// adjoint). This yields exact parameter gradients of scalar objectives
// built from directional derivatives of the network output.
std::pair<Eigen::VectorXd, Eigen::VectorXd> mlp_backward_second(
    const MlpStack& net, const MlpTrace& trace, const MlpTangentTrace& tangent,
    const Eigen::VectorXd& out_grad, const Eigen::VectorXd& out_dot_grad,
    MlpGrads* grads);

// Kaiming-style fan-in uniform init: entries ~ U(-g, g) with
// g = gain * sqrt(3 / fan_in); biases zero. Weights are drawn row-major.
DenseLayer init_dense(int out, int in, double gain, Rng& rng);
MlpStack init_mlp(const std::vector<int>& dims, double final_gain, Rng& rng);

// Named view over externally owned parameter/gradient storage.
// Iteration order is insertion order and fixes the checkpoint layout
// and the Adam update order.
class ParamSet {
 public:
  struct Entry {
    std::string name;
    double* value = nullptr;
    double* grad = nullptr;
    std::vector<std::uint64_t> shape;
    std::size_t size = 0;
  };

  void add(const std::string& name, Eigen::MatrixXd& value,
           Eigen::MatrixXd& grad);
  void add(const std::string& name, Eigen::VectorXd& value,
           Eigen::VectorXd& grad);
  void add_scalar(const std::string& name, double& value, double& grad);
  void add_mlp(const std::string& prefix, MlpStack& net, MlpGrads& grads);

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t total_size() const;
  void zero_grads();

  std::vector<double> flatten_values() const;
  std::vector<double> flatten_grads() const;
  void set_values(std::span<const double> flat);

 private:
  std::vector<Entry> entries_;
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  long step = 0;

  void init(const ParamSet& params);
};

// One Adam update over every entry of `params` from its gradients.
// Throws NumericError on non-finite gradients, naming the parameter.
void adam_step(ParamSet& params, AdamState& state, const AdamConfig& cfg);

// Central finite differences of a scalar function, h per coordinate.
std::vector<double> central_differences(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, double h);

struct GradCheckReport {
  bool pass = false;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
};

// Compares an analytic gradient against central differences. Relative
// error per coordinate uses max(|analytic|, |numeric|, rel_floor * scale)
// as denominator, where scale is the largest magnitude seen in either
// gradient; this keeps exactly-zero coordinates from dominating.
GradCheckReport finite_diff_check(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, std::span<const double> analytic, double h,
    double tol, double rel_floor = 1e-3);

}  // namespace ddgkit
