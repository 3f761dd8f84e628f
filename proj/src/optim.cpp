#include "funclm/optim.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <map>
#include <random>

#include "funclm/errors.hpp"

namespace funclm {

ParamVector pack(const Model& model) {
  ParamVector out;
  out.values.reserve(model.parameter_count());
  for (const auto& [t, m] : model.matrices()) {
    out.layout.push_back({t, out.values.size(), m.values().size()});
    out.values.insert(out.values.end(), m.values().begin(), m.values().end());
  }
  return out;
}

void unpack(const ParamVector& params, Model& model) {
  if (params.layout.size() != model.matrices().size())
    throw LengthMismatch("parameter layout has " + std::to_string(params.layout.size()) +
                         " segments, model has " +
                         std::to_string(model.matrices().size()) + " matrices");
  for (const auto& seg : params.layout) {
    auto& values = model.matrix(seg.type).values();
    if (seg.extent != values.size() || seg.offset + seg.extent > params.values.size())
      throw LengthMismatch("segment for '" + to_string(seg.type) + "' does not fit");
    std::copy_n(params.values.begin() + static_cast<std::ptrdiff_t>(seg.offset), seg.extent,
                values.begin());
  }
}

void LossConfig::validate() const {
  if (!std::isfinite(l1_weight) || !std::isfinite(l2_weight) || l1_weight < 0 ||
      l2_weight < 0)
    throw Error("regularization weights must be finite and non-negative");
}

namespace {

// Gradient accumulator shaped like the model: one flat buffer plus the
// offset of each type's matrix inside it.
struct GradBuffer {
  ParamVector params;
  std::map<PregroupType, std::size_t> offset;

  explicit GradBuffer(const Model& model) : params(pack(model)) {
    std::fill(params.values.begin(), params.values.end(), 0.0);
    for (const auto& seg : params.layout) offset[seg.type] = seg.offset;
  }

  std::span<double> row(const Model& model, const PregroupType& t, std::size_t r) {
    const std::size_t cols = model.matrix(t).cols();
    return {params.values.data() + offset.at(t) + r * cols, cols};
  }
};

std::size_t row_of(const EncodingMatrix& m, const std::string& word) {
  const auto r = m.row_index(word);
  if (!r)
    throw WordNotInTypeVocabulary("word '" + word + "' is not in the vocabulary of type '" +
                                  to_string(m.type()) + "'");
  return *r;
}

// -log softmax(logits)[gold] with its gradient (softmax - onehot).
double softmax_cross_entropy(std::span<const double> logits, std::size_t gold,
                             std::vector<double>* dlogits) {
  const auto logp = log_softmax(logits);
  if (dlogits) {
    dlogits->resize(logp.size());
    for (std::size_t i = 0; i < logp.size(); ++i)
      (*dlogits)[i] = std::exp(logp[i]) - (i == gold ? 1.0 : 0.0);
  }
  return -logp[gold];
}

double example_loss(const Model& model, const MaskedExample& ex, GradBuffer* g) {
  // forward: row-select -> contraction -> E_t v -> softmax cross-entropy
  const Network net = compile(ex.hole_diagram, model.dims());
  if (dim_of(model.dims(), ex.hole_diagram.cod()) != 1)
    throw Error("masked-word loss requires a one-dimensional sentence space");
  const auto factors = factor_values(model, net);
  const Tensor v = contract(net, factors);
  const EncodingMatrix& e = model.matrix(ex.hole_type);
  const std::size_t gold = row_of(e, ex.gold);
  const auto z = logits(model, ex.hole_type, v.values);

  std::vector<double> dz;
  const double value = softmax_cross_entropy(z, gold, g ? &dz : nullptr);
  if (!g) return value;

  // backward through E_t v: dE += dz v^T, dv = E^T dz
  std::vector<double> dv(e.cols(), 0.0);
  for (std::size_t r = 0; r < e.rows(); ++r) {
    const auto row = e.row(r);
    auto grow = g->row(model, ex.hole_type, r);
    for (std::size_t c = 0; c < e.cols(); ++c) {
      grow[c] += dz[r] * v.values[c];
      dv[c] += dz[r] * row[c];
    }
  }

  // backward through the contraction, then scatter into the selected rows
  std::vector<std::vector<double>> dfactors(net.factors.size());
  contract_backward(net, factors, dv, dfactors);
  for (std::size_t f = 0; f < net.factors.size(); ++f) {
    const auto& factor = net.factors[f];
    auto grow = g->row(model, factor.type, row_of(model.matrix(factor.type), factor.word));
    for (std::size_t c = 0; c < grow.size(); ++c) grow[c] += dfactors[f][c];
  }
  return value;
}

double regularizer(const ParamVector& theta, const LossConfig& cfg, ParamVector* g) {
  double l1 = 0.0, l2 = 0.0;
  for (std::size_t i = 0; i < theta.values.size(); ++i) {
    const double x = theta.values[i];
    l1 += std::abs(x);
    l2 += x * x;
    if (g) {
      const double sign = x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0);
      g->values[i] += cfg.l1_weight * sign + 2.0 * cfg.l2_weight * x;
    }
  }
  return cfg.l1_weight * l1 + cfg.l2_weight * l2;
}

double run(const Model& model, std::span<const MaskedExample> batch, const LossConfig& cfg,
           GradBuffer* g) {
  cfg.validate();
  const ParamVector theta = pack(model);
  for (double x : theta.values)
    if (!std::isfinite(x)) throw NonFinite("model has a non-finite parameter");

  double total = 0.0;
  for (const auto& ex : batch) total += example_loss(model, ex, g);
  total += regularizer(theta, cfg, g ? &g->params : nullptr);
  if (!std::isfinite(total)) throw NonFinite("loss is not finite");
  return total;
}

}  // namespace

double loss(const Model& model, std::span<const MaskedExample> batch, const LossConfig& cfg) {
  return run(model, batch, cfg, nullptr);
}

ParamVector grad(const Model& model, std::span<const MaskedExample> batch,
                 const LossConfig& cfg) {
  return value_and_grad(model, batch, cfg).grad;
}

LossAndGrad value_and_grad(const Model& model, std::span<const MaskedExample> batch,
                           const LossConfig& cfg) {
  GradBuffer g(model);
  const double value = run(model, batch, cfg, &g);
  return {value, std::move(g.params)};
}

AdamState AdamState::init(std::size_t size, double lr) {
  AdamState s;
  s.first_moment.assign(size, 0.0);
  s.second_moment.assign(size, 0.0);
  s.lr = lr;
  return s;
}

std::pair<AdamState, ParamVector> adam_step(const AdamState& state, const ParamVector& params,
                                            const ParamVector& g) {
  const std::size_t n = params.size();
  if (g.size() != n || state.first_moment.size() != n || state.second_moment.size() != n)
    throw LengthMismatch("adam_step: parameters, gradient and moments must have equal length");

  AdamState next = state;
  ParamVector out = params;
  ++next.step_count;
  const double t = static_cast<double>(next.step_count);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < n; ++i) {
    auto& m = next.first_moment[i];
    auto& v = next.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * g.values[i];
    v = state.beta2 * v + (1.0 - state.beta2) * g.values[i] * g.values[i];
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    out.values[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
  return {std::move(next), std::move(out)};
}

std::vector<double> svd_init(std::uint64_t seed, std::size_t rows, std::size_t cols) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd draw(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      draw(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = normal(rng);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(draw, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::MatrixXd polar = svd.matrixU() * svd.matrixV().transpose();

  std::vector<double> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      out[r * cols + c] = polar(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  return out;
}

}  // namespace funclm
