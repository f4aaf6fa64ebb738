#include "ddgkit/net.hpp"

#include <cmath>
#include <numbers>

#include "ddgkit/error.hpp"

namespace ddgkit {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }
double std_normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

}  // namespace

double gelu(double x) { return x * std_normal_cdf(x); }

double gelu_prime(double x) {
  return std_normal_cdf(x) + x * std_normal_pdf(x);
}

double gelu_second(double x) {
  return std_normal_pdf(x) * (2.0 - x * x);
}

Eigen::VectorXd dense_forward(const DenseLayer& layer,
                              const Eigen::VectorXd& x) {
  if (layer.w.cols() != x.size() || layer.w.rows() != layer.b.size()) {
    throw NumericError("dense_forward: dimension mismatch (W is " +
                       std::to_string(layer.w.rows()) + "x" +
                       std::to_string(layer.w.cols()) + ", x has " +
                       std::to_string(x.size()) + ", b has " +
                       std::to_string(layer.b.size()) + ")");
  }
  return layer.w * x + layer.b;
}

int MlpStack::in_dim() const {
  return layers.empty() ? 0 : static_cast<int>(layers.front().w.cols());
}

int MlpStack::out_dim() const {
  return layers.empty() ? 0 : static_cast<int>(layers.back().w.rows());
}

Eigen::VectorXd mlp_forward(const MlpStack& net, const Eigen::VectorXd& x,
                            MlpTrace* trace) {
  if (net.layers.empty()) throw NumericError("mlp_forward: empty stack");
  if (trace != nullptr) {
    trace->recorded = true;
    trace->input = x;
    trace->pre.resize(net.layers.size());
    trace->post.resize(net.layers.size());
  }
  Eigen::VectorXd h = x;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    Eigen::VectorXd z = dense_forward(net.layers[l], h);
    if (trace != nullptr) trace->pre[l] = z;
    if (l + 1 < net.layers.size()) {
      h = z.unaryExpr([](double v) { return gelu(v); });
    } else {
      h = std::move(z);
    }
    if (trace != nullptr) trace->post[l] = h;
  }
  return h;
}

void MlpGrads::init_like(const MlpStack& net) {
  w.resize(net.layers.size());
  b.resize(net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    w[l] = Eigen::MatrixXd::Zero(net.layers[l].w.rows(), net.layers[l].w.cols());
    b[l] = Eigen::VectorXd::Zero(net.layers[l].b.size());
  }
}

void MlpGrads::set_zero() {
  for (auto& m : w) m.setZero();
  for (auto& v : b) v.setZero();
}

Eigen::VectorXd mlp_backward(const MlpStack& net, const MlpTrace& trace,
                             const Eigen::VectorXd& out_grad, MlpGrads* grads) {
  if (!trace.recorded) {
    throw NumericError("mlp_backward: no recorded forward pass");
  }
  Eigen::VectorXd hbar = out_grad;
  for (std::size_t l = net.layers.size(); l-- > 0;) {
    // hbar currently holds the adjoint of post[l].
    Eigen::VectorXd zbar;
    if (l + 1 < net.layers.size()) {
      zbar = hbar.cwiseProduct(
          trace.pre[l].unaryExpr([](double v) { return gelu_prime(v); }));
    } else {
      zbar = hbar;
    }
    const Eigen::VectorXd& in = l == 0 ? trace.input : trace.post[l - 1];
    if (grads != nullptr) {
      grads->w[l].noalias() += zbar * in.transpose();
      grads->b[l] += zbar;
    }
    hbar.noalias() = net.layers[l].w.transpose() * zbar;
  }
  return hbar;
}

Eigen::VectorXd mlp_forward_tangent(const MlpStack& net, const MlpTrace& trace,
                                    const Eigen::VectorXd& x_dot,
                                    MlpTangentTrace* tangent) {
  if (!trace.recorded) {
    throw NumericError("mlp_forward_tangent: no recorded forward pass");
  }
  if (tangent != nullptr) {
    tangent->input_dot = x_dot;
    tangent->pre_dot.resize(net.layers.size());
    tangent->post_dot.resize(net.layers.size());
  }
  Eigen::VectorXd hdot = x_dot;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    Eigen::VectorXd zdot = net.layers[l].w * hdot;
    if (tangent != nullptr) tangent->pre_dot[l] = zdot;
    if (l + 1 < net.layers.size()) {
      hdot = zdot.cwiseProduct(
          trace.pre[l].unaryExpr([](double v) { return gelu_prime(v); }));
    } else {
      hdot = std::move(zdot);
    }
    if (tangent != nullptr) tangent->post_dot[l] = hdot;
  }
  return hdot;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> mlp_backward_second(
    const MlpStack& net, const MlpTrace& trace, const MlpTangentTrace& tangent,
    const Eigen::VectorXd& out_grad, const Eigen::VectorXd& out_dot_grad,
    MlpGrads* grads) {
  if (!trace.recorded) {
    throw NumericError("mlp_backward_second: no recorded forward pass");
  }
  Eigen::VectorXd hbar = out_grad;       // adjoint of post[l]
  Eigen::VectorXd hdotbar = out_dot_grad;  // adjoint of post_dot[l]
  for (std::size_t l = net.layers.size(); l-- > 0;) {
    Eigen::VectorXd zbar;
    Eigen::VectorXd zdotbar;
    if (l + 1 < net.layers.size()) {
      // post = gelu(pre); post_dot = gelu'(pre) .* pre_dot.
      const Eigen::VectorXd g1 =
          trace.pre[l].unaryExpr([](double v) { return gelu_prime(v); });
      const Eigen::VectorXd g2 =
          trace.pre[l].unaryExpr([](double v) { return gelu_second(v); });
      zbar = hbar.cwiseProduct(g1) +
             hdotbar.cwiseProduct(g2).cwiseProduct(tangent.pre_dot[l]);
      zdotbar = hdotbar.cwiseProduct(g1);
    } else {
      zbar = hbar;
      zdotbar = hdotbar;
    }
    const Eigen::VectorXd& in = l == 0 ? trace.input : trace.post[l - 1];
    const Eigen::VectorXd& in_dot =
        l == 0 ? tangent.input_dot : tangent.post_dot[l - 1];
    if (grads != nullptr) {
      // pre = W in + b; pre_dot = W in_dot. Both channels hit W.
      grads->w[l].noalias() += zbar * in.transpose();
      grads->w[l].noalias() += zdotbar * in_dot.transpose();
      grads->b[l] += zbar;
    }
    Eigen::VectorXd next_hbar = net.layers[l].w.transpose() * zbar;
    Eigen::VectorXd next_hdotbar = net.layers[l].w.transpose() * zdotbar;
    hbar = std::move(next_hbar);
    hdotbar = std::move(next_hdotbar);
  }
  return {hbar, hdotbar};
}

DenseLayer init_dense(int out, int in, double gain, Rng& rng) {
  DenseLayer layer;
  layer.w.resize(out, in);
  const double bound = gain * std::sqrt(3.0 / static_cast<double>(in));
  for (int r = 0; r < out; ++r) {
    for (int c = 0; c < in; ++c) {
      layer.w(r, c) = rng.uniform(-bound, bound);
    }
  }
  layer.b = Eigen::VectorXd::Zero(out);
  return layer;
}

MlpStack init_mlp(const std::vector<int>& dims, double final_gain, Rng& rng) {
  if (dims.size() < 2) throw NumericError("init_mlp: need at least two dims");
  MlpStack net;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const bool last = l + 2 == dims.size();
    net.layers.push_back(
        init_dense(dims[l + 1], dims[l], last ? final_gain : 1.0, rng));
  }
  return net;
}

void ParamSet::add(const std::string& name, Eigen::MatrixXd& value,
                   Eigen::MatrixXd& grad) {
  if (value.rows() != grad.rows() || value.cols() != grad.cols()) {
    throw NumericError("ParamSet: value/grad shape mismatch for " + name);
  }
  Entry e;
  e.name = name;
  e.value = value.data();
  e.grad = grad.data();
  e.shape = {static_cast<std::uint64_t>(value.rows()),
             static_cast<std::uint64_t>(value.cols())};
  e.size = static_cast<std::size_t>(value.size());
  entries_.push_back(std::move(e));
}

void ParamSet::add(const std::string& name, Eigen::VectorXd& value,
                   Eigen::VectorXd& grad) {
  if (value.size() != grad.size()) {
    throw NumericError("ParamSet: value/grad shape mismatch for " + name);
  }
  Entry e;
  e.name = name;
  e.value = value.data();
  e.grad = grad.data();
  e.shape = {static_cast<std::uint64_t>(value.size())};
  e.size = static_cast<std::size_t>(value.size());
  entries_.push_back(std::move(e));
}

void ParamSet::add_scalar(const std::string& name, double& value,
                          double& grad) {
  Entry e;
  e.name = name;
  e.value = &value;
  e.grad = &grad;
  e.shape = {1};
  e.size = 1;
  entries_.push_back(std::move(e));
}

void ParamSet::add_mlp(const std::string& prefix, MlpStack& net,
                       MlpGrads& grads) {
  if (grads.w.size() != net.layers.size()) {
    throw NumericError("ParamSet: gradient stack shape mismatch for " + prefix);
  }
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const std::string base = prefix + "." + std::to_string(l);
    add(base + ".w", net.layers[l].w, grads.w[l]);
    add(base + ".b", net.layers[l].b, grads.b[l]);
  }
}

std::size_t ParamSet::total_size() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.size;
  return n;
}

void ParamSet::zero_grads() {
  for (auto& e : entries_) {
    std::fill(e.grad, e.grad + e.size, 0.0);
  }
}

std::vector<double> ParamSet::flatten_values() const {
  std::vector<double> flat;
  flat.reserve(total_size());
  for (const auto& e : entries_) flat.insert(flat.end(), e.value, e.value + e.size);
  return flat;
}

std::vector<double> ParamSet::flatten_grads() const {
  std::vector<double> flat;
  flat.reserve(total_size());
  for (const auto& e : entries_) flat.insert(flat.end(), e.grad, e.grad + e.size);
  return flat;
}

void ParamSet::set_values(std::span<const double> flat) {
  if (flat.size() != total_size()) {
    throw NumericError("ParamSet::set_values: size mismatch");
  }
  std::size_t off = 0;
  for (auto& e : entries_) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
              flat.begin() + static_cast<std::ptrdiff_t>(off + e.size), e.value);
    off += e.size;
  }
}

void AdamState::init(const ParamSet& params) {
  m.clear();
  v.clear();
  for (const auto& e : params.entries()) {
    m.emplace_back(e.size, 0.0);
    v.emplace_back(e.size, 0.0);
  }
  step = 0;
}

void adam_step(ParamSet& params, AdamState& state, const AdamConfig& cfg) {
  if (state.m.size() != params.entries().size()) {
    throw NumericError("adam_step: state not initialized for this ParamSet");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.entries().size(); ++i) {
    const auto& e = params.entries()[i];
    for (std::size_t k = 0; k < e.size; ++k) {
      const double g = e.grad[k];
      if (!std::isfinite(g)) {
        throw NumericError("adam_step: non-finite gradient in " + e.name +
                           "[" + std::to_string(k) + "]");
      }
      double& mk = state.m[i][k];
      double& vk = state.v[i][k];
      mk = cfg.beta1 * mk + (1.0 - cfg.beta1) * g;
      vk = cfg.beta2 * vk + (1.0 - cfg.beta2) * g * g;
      const double mhat = mk / bc1;
      const double vhat = vk / bc2;
      e.value[k] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

std::vector<double> central_differences(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, double h) {
  std::vector<double> xs(x.begin(), x.end());
  std::vector<double> grad(x.size(), 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double orig = xs[i];
    xs[i] = orig + h;
    const double fp = f(xs);
    xs[i] = orig - h;
    const double fm = f(xs);
    xs[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericError("central_differences: non-finite evaluation at index " +
                         std::to_string(i));
    }
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

GradCheckReport finite_diff_check(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, std::span<const double> analytic, double h,
    double tol, double rel_floor) {
  if (x.size() != analytic.size()) {
    throw NumericError("finite_diff_check: gradient length mismatch");
  }
  const std::vector<double> numeric = central_differences(f, x, h);
  double scale = 0.0;
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    scale = std::max(scale, std::max(std::abs(numeric[i]), std::abs(analytic[i])));
  }
  if (scale == 0.0) scale = 1.0;
  GradCheckReport rep;
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    const double denom = std::max(
        {std::abs(numeric[i]), std::abs(analytic[i]), rel_floor * scale});
    const double rel = std::abs(numeric[i] - analytic[i]) / denom;
    if (rel >= rep.max_rel_error) {
      rep.max_rel_error = rel;
      rep.worst_index = i;
      rep.analytic_at_worst = analytic[i];
      rep.numeric_at_worst = numeric[i];
    }
  }
  rep.pass = rep.max_rel_error <= tol;
  return rep;
}

}  // namespace ddgkit
