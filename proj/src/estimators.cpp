#include "proxsg/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace proxsg {

namespace {

SupportAtom atom_from_batch(const SampledBatch& batch) {
  SupportAtom atom;
  atom.indices = batch.indices;
  atom.weights = batch.weights;
  atom.prob = 0.0;
  return atom;
}

}  // namespace

// ---------------------------------------------------------------------------
// Quantizer
// ---------------------------------------------------------------------------

Quantizer Quantizer::identity(int dim) {
  if (dim < 1) throw std::invalid_argument("quantizer: dim must be >= 1");
  return Quantizer(QuantizerKind::Identity, dim, dim);
}

Quantizer Quantizer::random_sparsification(int dim, int r) {
  if (dim < 1) throw std::invalid_argument("quantizer: dim must be >= 1");
  if (r < 1 || r > dim)
    throw std::invalid_argument("quantizer: r must be in [1, dim]");
  return Quantizer(QuantizerKind::RandomSparsification, dim, r);
}

double Quantizer::omega() const {
  if (kind_ == QuantizerKind::Identity) return 0.0;
  return double(dim_) / double(r_) - 1.0;
}

Vec Quantizer::apply(const Vec& x, RngStream& rng) const {
  if (int(x.size()) != dim_)
    throw std::invalid_argument("quantizer: dimension mismatch");
  if (kind_ == QuantizerKind::Identity) return x;
  const SampledBatch pick =
      SamplingScheme::b_nice(dim_, r_).draw(rng);
  Vec out = Vec::Zero(dim_);
  const double scale = double(dim_) / double(r_);
  for (int j : pick.indices) out[j] = scale * x[j];
  return out;
}

std::vector<std::pair<Vec, double>> Quantizer::outcomes(
    const Vec& x, std::uint64_t max_atoms) const {
  if (int(x.size()) != dim_)
    throw std::invalid_argument("quantizer: dimension mismatch");
  std::vector<std::pair<Vec, double>> out;
  if (kind_ == QuantizerKind::Identity) {
    out.emplace_back(x, 1.0);
    return out;
  }
  const double scale = double(dim_) / double(r_);
  for (const SupportAtom& atom :
       SamplingScheme::b_nice(dim_, r_).enumerate_support(max_atoms)) {
    Vec v = Vec::Zero(dim_);
    for (int j : atom.indices) v[j] = scale * x[j];
    out.emplace_back(std::move(v), atom.prob);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Estimator base
// ---------------------------------------------------------------------------

void Estimator::require_init() const {
  if (!initialized_)
    throw std::logic_error("estimator: init(x0) must be called first");
}

Vec Estimator::gradient_for(const Vec&, const SupportAtom&) const {
  throw std::logic_error(
      "estimator: gradient_for is not available (no finite batch support)");
}

Vec Estimator::sample(const Vec& x, RngStream& rng) const {
  const SamplingScheme* scheme = support();
  if (scheme == nullptr)
    throw std::logic_error("estimator: sample() not implemented");
  return gradient_for(x, atom_from_batch(scheme->draw(rng)));
}

// ---------------------------------------------------------------------------
// SgdEstimator
// ---------------------------------------------------------------------------

SgdEstimator::SgdEstimator(FiniteSumObjective obj, SamplingScheme scheme)
    : Estimator(std::move(obj)), scheme_(std::move(scheme)) {
  if (scheme_.n() != obj_.count())
    throw std::invalid_argument("sgd: sampling scheme size mismatch");
}

void SgdEstimator::init(const Vec&) {
  grad_evals_ = 0.0;
  initialized_ = true;
}

Vec SgdEstimator::step(const Vec& x, RngBundle& rng) {
  require_init();
  const SampledBatch batch = scheme_.draw(rng.batch);
  grad_evals_ += double(batch.indices.size());
  return subsample_gradient(obj_, batch, x);
}

Vec SgdEstimator::gradient_for(const Vec& x, const SupportAtom& atom) const {
  SampledBatch batch;
  batch.indices = atom.indices;
  batch.weights = atom.weights;
  return subsample_gradient(obj_, batch, x);
}

bool SgdEstimator::is_uniform_single() const {
  if (scheme_.kind() == SamplingKind::BNice) return scheme_.batch_size() == 1;
  if (scheme_.kind() != SamplingKind::SingleElement) return false;
  const auto& p = scheme_.probabilities();
  for (double v : p)
    if (std::abs(v - 1.0 / double(scheme_.n())) > 1e-12) return false;
  return true;
}

EstimatorConstants SgdEstimator::constants(const ReferenceSolution& ref) const {
  if (cached_) return *cached_;
  EstimatorConstants c;
  c.B = 0.0;
  c.rho = 1.0;
  c.C = 0.0;
  c.D2 = 0.0;
  c.G = 0.0;
  RngStream mc(mix_seed(0xD15E0u, std::uint64_t(obj_.count()),
                        std::uint64_t(scheme_.batch_size())));
  if (is_uniform_single()) {
    c.A = 2.0 * obj_.max_component_smoothness();
    c.D1 = 2.0 * gradient_noise(obj_, scheme_, ref, NoiseMode::Uncentered, &mc)
                     .value;
  } else {
    c.A = 2.0 * expected_smoothness(scheme_, obj_.component_smoothness(),
                                    obj_.smoothness());
    c.D1 =
        2.0 * gradient_noise(obj_, scheme_, ref, NoiseMode::Centered, &mc).value;
  }
  cached_ = c;
  return c;
}

// ---------------------------------------------------------------------------
// SagaEstimator
// ---------------------------------------------------------------------------

SagaEstimator::SagaEstimator(FiniteSumObjective obj, int b)
    : Estimator(std::move(obj)),
      b_(b),
      scheme_(SamplingScheme::b_nice(obj_.count(), b)) {}

void SagaEstimator::init(const Vec& x0) {
  const int n = obj_.count();
  const int d = obj_.dim();
  J_.resize(d, n);
  for (int i = 0; i < n; ++i) J_.col(i) = obj_.component_gradient(i, x0);
  jmean_ = J_.rowwise().mean();
  grad_evals_ = double(n);
  initialized_ = true;
}

Vec SagaEstimator::step(const Vec& x, RngBundle& rng) {
  require_init();
  const SampledBatch batch = scheme_.draw(rng.batch);
  Vec g = jmean_;
  const double inv_b = 1.0 / double(b_);
  const double inv_n = 1.0 / double(obj_.count());
  for (int i : batch.indices) {
    const Vec gi = obj_.component_gradient(i, x);
    g.noalias() += inv_b * (gi - J_.col(i));
    jmean_.noalias() += inv_n * (gi - J_.col(i));
    J_.col(i) = gi;
  }
  grad_evals_ += double(b_);
  return g;
}

Vec SagaEstimator::gradient_for(const Vec& x, const SupportAtom& atom) const {
  require_init();
  Vec g = jmean_;
  const double inv_b = 1.0 / double(atom.indices.size());
  for (int i : atom.indices)
    g.noalias() += inv_b * (obj_.component_gradient(i, x) - J_.col(i));
  return g;
}

double SagaEstimator::state_factor() const {
  const int n = obj_.count();
  if (n == 1) return 0.0;
  return (1.0 / (double(n) * double(b_))) * (double(n - b_) / double(n - 1));
}

double SagaEstimator::sigma_sq(const ReferenceSolution& ref, RngStream*) const {
  require_init();
  const double factor = state_factor();
  if (factor == 0.0) return 0.0;
  return factor * (J_ - ref.grads_at_star).squaredNorm();
}

double SagaEstimator::expected_next_sigma_sq(
    const Vec& x, const ReferenceSolution& ref) const {
  require_init();
  const double factor = state_factor();
  if (factor == 0.0) return 0.0;
  const int n = obj_.count();
  // Each component enters the drawn batch with probability b/n, swapping its
  // table column for the fresh gradient; the Frobenius norm updates
  // column-by-column.
  double total = (J_ - ref.grads_at_star).squaredNorm();
  double shift = 0.0;
  for (int i = 0; i < n; ++i) {
    const double cur = (J_.col(i) - ref.grads_at_star.col(i)).squaredNorm();
    const double fresh =
        (obj_.component_gradient(i, x) - ref.grads_at_star.col(i))
            .squaredNorm();
    shift += fresh - cur;
  }
  total += (double(b_) / double(n)) * shift;
  return factor * total;
}

EstimatorConstants SagaEstimator::constants(const ReferenceSolution&) const {
  const int n = obj_.count();
  const double L_max = obj_.max_component_smoothness();
  const double L = obj_.smoothness();
  const double zeta = expected_residual(n, b_, L_max);
  EstimatorConstants c;
  c.A = 2.0 * expected_smoothness(scheme_, obj_.component_smoothness(), L);
  c.B = 2.0;
  c.rho = double(b_) / double(n);
  c.C = double(b_) * zeta / double(n);
  c.D1 = 0.0;
  c.D2 = 0.0;
  c.G = zeta * L;
  return c;
}

// ---------------------------------------------------------------------------
// LsvrgEstimator
// ---------------------------------------------------------------------------

LsvrgEstimator::LsvrgEstimator(FiniteSumObjective obj, int b, double p)
    : Estimator(std::move(obj)),
      b_(b),
      p_(p),
      scheme_(SamplingScheme::b_nice(obj_.count(), b)) {
  if (!(p > 0.0) || p > 1.0)
    throw std::invalid_argument("lsvrg: p must be in (0, 1]");
}

void LsvrgEstimator::init(const Vec& x0) {
  w_ = x0;
  full_grad_w_ = obj_.gradient(x0);
  grad_evals_ = double(obj_.count());
  initialized_ = true;
}

Vec LsvrgEstimator::step(const Vec& x, RngBundle& rng) {
  require_init();
  const SampledBatch batch = scheme_.draw(rng.batch);
  Vec g = full_grad_w_;
  const double inv_b = 1.0 / double(b_);
  for (int i : batch.indices)
    g.noalias() +=
        inv_b * (obj_.component_gradient(i, x) - obj_.component_gradient(i, w_));
  grad_evals_ += 2.0 * double(b_);
  // anchor refresh decided after the estimate is formed
  if (rng.coin.bernoulli(p_)) {
    w_ = x;
    full_grad_w_ = obj_.gradient(x);
    grad_evals_ += double(obj_.count());
  }
  return g;
}

Vec LsvrgEstimator::gradient_for(const Vec& x, const SupportAtom& atom) const {
  require_init();
  Vec g = full_grad_w_;
  const double inv_b = 1.0 / double(atom.indices.size());
  for (int i : atom.indices)
    g.noalias() +=
        inv_b * (obj_.component_gradient(i, x) - obj_.component_gradient(i, w_));
  return g;
}

double LsvrgEstimator::anchored_variance(const Vec& v,
                                         const ReferenceSolution& ref,
                                         RngStream* mc) const {
  const int n = obj_.count();
  // columns: Z_i = (grad f_i(v) - grad f_i(x*)) recentred by their mean
  Mat Z(obj_.dim(), n);
  for (int i = 0; i < n; ++i)
    Z.col(i) = obj_.component_gradient(i, v) - ref.grads_at_star.col(i);
  const Vec mean = Z.rowwise().mean();
  Z.colwise() -= mean;

  const std::uint64_t cutoff = 100000;
  if (scheme_.support_size() <= cutoff) {
    double acc = 0.0;
    const double inv_b = 1.0 / double(b_);
    for (const SupportAtom& atom : scheme_.enumerate_support(cutoff)) {
      Vec s = Vec::Zero(obj_.dim());
      for (int i : atom.indices) s.noalias() += Z.col(i);
      acc += atom.prob * (inv_b * s).squaredNorm();
    }
    return acc;
  }
  if (mc == nullptr)
    throw std::invalid_argument(
        "lsvrg: batch support too large to enumerate; a Monte Carlo stream "
        "is required");
  const std::uint64_t samples = 100000;
  double mean_v = 0.0;
  const double inv_b = 1.0 / double(b_);
  for (std::uint64_t s = 0; s < samples; ++s) {
    const SampledBatch batch = scheme_.draw(*mc);
    Vec acc = Vec::Zero(obj_.dim());
    for (int i : batch.indices) acc.noalias() += Z.col(i);
    const double val = (inv_b * acc).squaredNorm();
    mean_v += (val - mean_v) / double(s + 1);
  }
  return mean_v;
}

double LsvrgEstimator::sigma_sq(const ReferenceSolution& ref,
                                RngStream* mc) const {
  require_init();
  return anchored_variance(w_, ref, mc);
}

double LsvrgEstimator::expected_next_sigma_sq(
    const Vec& x, const ReferenceSolution& ref) const {
  require_init();
  return (1.0 - p_) * anchored_variance(w_, ref) +
         p_ * anchored_variance(x, ref);
}

EstimatorConstants LsvrgEstimator::constants(const ReferenceSolution&) const {
  const double L = obj_.smoothness();
  const double calL =
      expected_smoothness(scheme_, obj_.component_smoothness(), L);
  EstimatorConstants c;
  c.A = 2.0 * calL;
  c.B = 2.0;
  c.rho = p_;
  c.C = p_ * calL;
  c.D1 = 0.0;
  c.D2 = 0.0;
  c.G = calL * L;
  return c;
}

// ---------------------------------------------------------------------------
// SegaEstimator
// ---------------------------------------------------------------------------

SegaEstimator::SegaEstimator(FiniteSumObjective obj, int block)
    : Estimator(std::move(obj)),
      block_(block),
      scheme_(SamplingScheme::b_nice(obj_.dim(), block)) {}

void SegaEstimator::init(const Vec&) {
  h_ = Vec::Zero(obj_.dim());
  grad_evals_ = 0.0;
  initialized_ = true;
}

Vec SegaEstimator::step(const Vec& x, RngBundle& rng) {
  require_init();
  const Vec full = obj_.gradient(x);
  const SampledBatch pick = scheme_.draw(rng.batch);
  const double scale = double(obj_.dim()) / double(block_);
  Vec g = h_;
  for (int j : pick.indices) {
    g[j] += scale * (full[j] - h_[j]);
    h_[j] = full[j];
  }
  grad_evals_ += double(obj_.count()) * double(block_) / double(obj_.dim());
  return g;
}

Vec SegaEstimator::gradient_for(const Vec& x, const SupportAtom& atom) const {
  require_init();
  const Vec full = obj_.gradient(x);
  const double scale = double(obj_.dim()) / double(atom.indices.size());
  Vec g = h_;
  for (int j : atom.indices) g[j] += scale * (full[j] - h_[j]);
  return g;
}

double SegaEstimator::sigma_sq(const ReferenceSolution& ref, RngStream*) const {
  require_init();
  return (h_ - ref.full_grad_at_star).squaredNorm();
}

double SegaEstimator::expected_next_sigma_sq(
    const Vec& x, const ReferenceSolution& ref) const {
  require_init();
  const double frac = double(block_) / double(obj_.dim());
  const Vec full = obj_.gradient(x);
  return (1.0 - frac) * (h_ - ref.full_grad_at_star).squaredNorm() +
         frac * (full - ref.full_grad_at_star).squaredNorm();
}

EstimatorConstants SegaEstimator::constants(const ReferenceSolution&) const {
  const double d = double(obj_.dim());
  const double b = double(block_);
  const double L = obj_.smoothness();
  EstimatorConstants c;
  c.A = 2.0 * d * L / b;
  c.B = 2.0 * (d / b - 1.0);
  c.rho = b / d;
  c.C = b * L / d;
  c.D1 = 0.0;
  c.D2 = 0.0;
  c.G = 0.0;
  return c;
}

// ---------------------------------------------------------------------------
// DianaEstimator
// ---------------------------------------------------------------------------

DianaEstimator::DianaEstimator(FiniteSumObjective obj, int nodes,
                               Quantizer quantizer, double alpha)
    : Estimator(std::move(obj)),
      m_(nodes),
      quant_(std::move(quantizer)),
      alpha_(alpha) {
  const int n = obj_.count();
  if (m_ < 1 || m_ > n)
    throw std::invalid_argument("diana: nodes must be in [1, n]");
  if (quant_.dim() != obj_.dim())
    throw std::invalid_argument("diana: quantizer dimension mismatch");
  if (!(alpha_ > 0.0) || alpha_ > 1.0)
    throw std::invalid_argument("diana: alpha must be in (0, 1]");
  const double limit = 1.0 / (1.0 + quant_.omega());
  if (alpha_ > limit + 1e-12)
    throw std::invalid_argument("diana: alpha must be <= 1/(1 + omega)");
  shards_.resize(size_t(m_));
  for (int j = 0; j < m_; ++j) {
    const int lo = int((std::int64_t(j) * n) / m_);
    const int hi = int((std::int64_t(j + 1) * n) / m_);
    for (int i = lo; i < hi; ++i) shards_[size_t(j)].push_back(i);
  }
  L_nodes_ = 0.0;
  for (int j = 0; j < m_; ++j)
    L_nodes_ = std::max(
        L_nodes_, obj_.group_smoothness(shards_[size_t(j)],
                                        double(m_) / double(n)));
}

Vec DianaEstimator::node_gradient(int j, const Vec& x) const {
  Vec g = Vec::Zero(obj_.dim());
  const double scale = double(m_) / double(obj_.count());
  for (int i : shards_[size_t(j)]) obj_.family().add_gradient(i, x, scale, g);
  return g;
}

double DianaEstimator::dispersion(const Vec& x) const {
  Mat node_grads(obj_.dim(), m_);
  for (int j = 0; j < m_; ++j) node_grads.col(j) = node_gradient(j, x);
  const Vec mean = node_grads.rowwise().mean();
  double acc = 0.0;
  for (int j = 0; j < m_; ++j)
    acc += (node_grads.col(j) - mean).squaredNorm();
  return acc / double(m_);
}

void DianaEstimator::init(const Vec&) {
  h_ = Mat::Zero(obj_.dim(), m_);
  grad_evals_ = 0.0;
  initialized_ = true;
}

Vec DianaEstimator::step(const Vec& x, RngBundle& rng) {
  require_init();
  Vec g = h_.rowwise().mean();
  Vec mean_hat = Vec::Zero(obj_.dim());
  for (int j = 0; j < m_; ++j) {
    const Vec delta = node_gradient(j, x) - h_.col(j);
    const Vec hat = quant_.apply(delta, rng.quantizer);
    mean_hat.noalias() += hat / double(m_);
    h_.col(j).noalias() += alpha_ * hat;
  }
  g.noalias() += mean_hat;
  grad_evals_ += double(obj_.count());
  return g;
}

Vec DianaEstimator::sample(const Vec& x, RngStream& rng) const {
  require_init();
  Vec g = h_.rowwise().mean();
  for (int j = 0; j < m_; ++j) {
    const Vec delta = node_gradient(j, x) - h_.col(j);
    g.noalias() += quant_.apply(delta, rng) / double(m_);
  }
  return g;
}

double DianaEstimator::sigma_sq(const ReferenceSolution& ref,
                                RngStream*) const {
  require_init();
  double acc = 0.0;
  for (int j = 0; j < m_; ++j)
    acc += (h_.col(j) - node_gradient(j, ref.x_star)).squaredNorm();
  return acc / double(m_);
}

double DianaEstimator::expected_next_sigma_sq(
    const Vec& x, const ReferenceSolution& ref) const {
  require_init();
  // E|h_j + alpha Q(delta_j) - grad phi_j(x*)|^2 expands exactly because the
  // quantizer satisfies E[Q(v)] = v and E|Q(v)|^2 = (1 + omega)|v|^2.
  const double omega = quant_.omega();
  double acc = 0.0;
  for (int j = 0; j < m_; ++j) {
    const Vec base = h_.col(j) - node_gradient(j, ref.x_star);
    const Vec delta = node_gradient(j, x) - h_.col(j);
    acc += base.squaredNorm() + 2.0 * alpha_ * base.dot(delta) +
           alpha_ * alpha_ * (1.0 + omega) * delta.squaredNorm();
  }
  return acc / double(m_);
}

EstimatorConstants DianaEstimator::constants(const ReferenceSolution& ref) const {
  const double omega = quant_.omega();
  const double mm = double(m_);
  // The node-dispersion level: exact and x-independent when the nodes share
  // one Hessian (the certification instances), otherwise a representative
  // level measured at the origin and at the reference point.
  const double disp = std::max(dispersion(Vec::Zero(obj_.dim())),
                               dispersion(ref.x_star));
  EstimatorConstants c;
  c.A = (1.0 + 2.0 * omega / mm) * L_nodes_;
  c.B = 2.0 * omega / mm;
  c.rho = alpha_;
  c.C = L_nodes_ * alpha_;
  c.D1 = (1.0 + omega) * disp / mm;
  c.D2 = alpha_ * disp;
  c.G = std::nullopt;
  return c;
}

// ---------------------------------------------------------------------------
// Factories
// ---------------------------------------------------------------------------

std::unique_ptr<Estimator> make_sgd(FiniteSumObjective obj,
                                    SamplingScheme scheme) {
  return std::make_unique<SgdEstimator>(std::move(obj), std::move(scheme));
}

std::unique_ptr<Estimator> make_saga(FiniteSumObjective obj, int b) {
  return std::make_unique<SagaEstimator>(std::move(obj), b);
}

std::unique_ptr<Estimator> make_lsvrg(FiniteSumObjective obj, int b,
                                      double p) {
  return std::make_unique<LsvrgEstimator>(std::move(obj), b, p);
}

std::unique_ptr<Estimator> make_sega(FiniteSumObjective obj, int block) {
  return std::make_unique<SegaEstimator>(std::move(obj), block);
}

std::unique_ptr<Estimator> make_diana(FiniteSumObjective obj, int nodes,
                                      Quantizer quantizer, double alpha) {
  return std::make_unique<DianaEstimator>(std::move(obj), nodes,
                                          std::move(quantizer), alpha);
}

}  // namespace proxsg
