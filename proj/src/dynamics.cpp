#include "oversmooth/dynamics.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "oversmooth/error.hpp"
#include "oversmooth/rng.hpp"

namespace oversmooth {

std::string to_string(const Activation& a) {
  switch (a.kind) {
    case ActivationKind::kIdentity: return "identity";
    case ActivationKind::kRelu: return "relu";
    case ActivationKind::kLeakyRelu: return "leaky_relu";
  }
  return "identity";
}

Activation parse_activation(const std::string& name, double slope) {
  if (name == "identity" || name == "linear") return Activation::identity();
  if (name == "relu") return Activation::relu();
  if (name == "leaky_relu") return Activation::leaky_relu(slope);
  throw Error(ErrorCode::kConfig, "unknown activation '" + name + "'");
}

std::string to_string(const Propagation& p) {
  return p.kind == PropagationKind::kNrs ? "nrs" : "rs";
}

double mu(const Eigen::MatrixXd& x) {
  const double denom = x.squaredNorm();
  if (denom == 0.0) throw Error(ErrorCode::kZeroInput, "mu of the zero matrix");
  const Eigen::VectorXd mean = x.rowwise().mean();
  const double num = (x.colwise() - mean).squaredNorm();
  return std::clamp(num / denom, 0.0, 1.0);
}

double mu_general(const Eigen::MatrixXd& x, const Eigen::VectorXd& pi) {
  if (pi.size() != x.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "pi length must equal n");
  }
  if (std::abs(pi.norm() - 1.0) > 1e-9 || (pi.array() <= 0.0).any()) {
    throw Error(ErrorCode::kInvalidArgument, "pi must be a positive unit vector");
  }
  const double denom = x.squaredNorm();
  if (denom == 0.0) throw Error(ErrorCode::kZeroInput, "mu of the zero matrix");
  const Eigen::MatrixXd residual = x - (x * pi) * pi.transpose();
  return std::clamp(residual.squaredNorm() / denom, 0.0, 1.0);
}

namespace {

double apply(const Activation& act, double v) {
  switch (act.kind) {
    case ActivationKind::kIdentity: return v;
    case ActivationKind::kRelu: return v > 0.0 ? v : 0.0;
    case ActivationKind::kLeakyRelu: return v > 0.0 ? v : act.slope * v;
  }
  return v;
}

Eigen::MatrixXd activate(const Activation& act, const Eigen::MatrixXd& x) {
  if (act.is_identity()) return x;
  return x.unaryExpr([&](double v) { return apply(act, v); });
}

// z P^T for z in R^{d x n}.
Eigen::MatrixXd aggregate(const Eigen::MatrixXd& z, const TransitionMatrix& tm) {
  return z * tm.sparse().transpose();
}

void check_dims(const FeatureState& s, const TransitionMatrix& tm,
                const Eigen::MatrixXd& w) {
  if (tm.size() != s.num_vertices()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "P is " + std::to_string(tm.size()) + "x" +
                    std::to_string(tm.size()) + " but state has " +
                    std::to_string(s.num_vertices()) + " vertices");
  }
  if (static_cast<std::size_t>(w.rows()) != s.dim() ||
      static_cast<std::size_t>(w.cols()) != s.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "W must be " + std::to_string(s.dim()) + "x" +
                    std::to_string(s.dim()));
  }
}

// Removes the consensus component that rounding leaks into y.
void project_out_consensus(Eigen::MatrixXd& y, const TransitionMatrix& tm) {
  const Eigen::VectorXd& l = tm.perron_left();
  const Eigen::VectorXd& r = tm.perron_right();
  const Eigen::VectorXd leak = (y * l) / r.dot(l);
  y -= leak * r.transpose();
}

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

FeatureState FeatureState::split(const Eigen::MatrixXd& x, double log_scale,
                                 const TransitionMatrix& tm, std::size_t t) {
  const Eigen::VectorXd& r = tm.perron_right();
  const Eigen::VectorXd& l = tm.perron_left();
  FeatureState s;
  s.right_ = r;
  s.t_ = t;
  s.consensus_log_ = log_scale;
  s.deviation_log_ = log_scale;

  bool constant_columns = tm.kind() == Normalization::kRowNormalized;
  for (Eigen::Index j = 1; constant_columns && j < x.cols(); ++j) {
    constant_columns = (x.col(j).array() == x.col(0).array()).all();
  }
  if (constant_columns) {
    // r = 1/sqrt(n), so x = (sqrt(n) x_0) r^T exactly.
    s.consensus_ = x.col(0) * std::sqrt(static_cast<double>(x.cols()));
    s.deviation_ = Eigen::MatrixXd::Zero(x.rows(), x.cols());
  } else {
    s.consensus_ = (x * l) / r.dot(l);
    s.deviation_ = x - s.consensus_ * r.transpose();
    project_out_consensus(s.deviation_, tm);
  }
  s.renormalize();
  return s;
}

FeatureState FeatureState::from_features(const Eigen::MatrixXd& x,
                                         const TransitionMatrix& tm) {
  if (static_cast<std::size_t>(x.cols()) != tm.size() || x.rows() == 0) {
    throw Error(ErrorCode::kDimensionMismatch,
                "features must be d x n with n = " + std::to_string(tm.size()));
  }
  if (x.squaredNorm() == 0.0) {
    throw Error(ErrorCode::kZeroInput, "initial features are zero");
  }
  return split(x, 0.0, tm, 0);
}

void FeatureState::renormalize() {
  const double nm = consensus_.norm();
  if (nm == 0.0 || consensus_log_ == kNegInf) {
    consensus_.setZero();
    consensus_log_ = kNegInf;
  } else {
    consensus_ /= nm;
    consensus_log_ += std::log(nm);
  }
  const double ny = deviation_.norm();
  if (ny == 0.0 || deviation_log_ == kNegInf) {
    deviation_.setZero();
    deviation_log_ = kNegInf;
  } else {
    deviation_ /= ny;
    deviation_log_ += std::log(ny);
  }
}

double FeatureState::log_numerator() const {
  if (deviation_log_ == kNegInf) return kNegInf;
  const Eigen::MatrixXd centered =
      deviation_ - (deviation_ * right_) * right_.transpose();
  const double sq = centered.squaredNorm();
  if (sq == 0.0) return kNegInf;
  return std::log(sq) + 2.0 * deviation_log_;
}

double FeatureState::log_denominator() const {
  const double s = std::max(consensus_log_, deviation_log_);
  const double ea = consensus_log_ == kNegInf ? 0.0 : std::exp(consensus_log_ - s);
  const double eb = deviation_log_ == kNegInf ? 0.0 : std::exp(deviation_log_ - s);
  double total = ea * ea + eb * eb;
  if (ea > 0.0 && eb > 0.0) {
    total += 2.0 * ea * eb * consensus_.dot(deviation_ * right_);
  }
  return 2.0 * s + std::log(total);
}

double FeatureState::log_mu() const {
  const double num = log_numerator();
  if (num == kNegInf) return kNegInf;
  return std::min(num - log_denominator(), 0.0);
}

double FeatureState::mu() const {
  const double lm = log_mu();
  return lm == kNegInf ? 0.0 : std::exp(lm);
}

double FeatureState::log_frob() const { return 0.5 * log_denominator(); }

Eigen::MatrixXd FeatureState::representative() const {
  const double s = log_frob();
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(consensus_.size(), right_.size());
  if (consensus_log_ != kNegInf) {
    x += std::exp(consensus_log_ - s) * consensus_ * right_.transpose();
  }
  if (deviation_log_ != kNegInf) x += std::exp(deviation_log_ - s) * deviation_;
  return x;
}

Eigen::MatrixXd FeatureState::true_features() const {
  return std::exp(log_frob()) * representative();
}

FeatureState step_nrs(const FeatureState& s, const TransitionMatrix& tm,
                      const Eigen::MatrixXd& w, const Activation& act) {
  check_dims(s, tm, w);
  if (!act.is_identity()) {
    // ReLU-type activations are positively homogeneous, so the scale
    // factors out of sigma.
    const Eigen::MatrixXd x = s.representative();
    return FeatureState::split(aggregate(w * activate(act, x), tm),
                               s.log_frob(), tm, s.t_ + 1);
  }
  FeatureState next = s;
  next.t_ = s.t_ + 1;
  next.consensus_ = tm.perron_root() * (w * s.consensus_);
  next.deviation_ = aggregate(w * s.deviation_, tm);
  project_out_consensus(next.deviation_, tm);
  next.renormalize();
  return next;
}

FeatureState step_rs(const FeatureState& s, const TransitionMatrix& tm,
                     const Eigen::MatrixXd& w, double alpha,
                     const Activation& act) {
  check_dims(s, tm, w);
  if (!act.is_identity()) {
    const Eigen::MatrixXd x = s.representative();
    return FeatureState::split(x + alpha * aggregate(w * activate(act, x), tm),
                               s.log_frob(), tm, s.t_ + 1);
  }
  FeatureState next = s;
  next.t_ = s.t_ + 1;
  next.consensus_ =
      s.consensus_ + (alpha * tm.perron_root()) * (w * s.consensus_);
  next.deviation_ = s.deviation_ + alpha * aggregate(w * s.deviation_, tm);
  project_out_consensus(next.deviation_, tm);
  next.renormalize();
  return next;
}

Eigen::MatrixXd initial_features(std::size_t d, std::size_t n,
                                 std::uint64_t seed, std::uint64_t trial) {
  CounterRng rng(seed, StreamDomain::kInitialFeatures, trial, 0);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(d, n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < d; ++i) x(i, j) = normal(rng);
  }
  return x;
}

namespace {

TraceRecord make_record(const FeatureState& s) {
  TraceRecord rec;
  rec.t = s.step();
  const double lm = s.log_mu();
  rec.log_frob = s.log_frob();
  rec.mu = lm == kNegInf ? 0.0 : std::exp(lm);
  rec.log_mu_tilde = lm == kNegInf ? kNegInf : lm + 2.0 * rec.log_frob;
  return rec;
}

}  // namespace

SimilarityTrace run_trajectory(const Eigen::MatrixXd& x0,
                               const TransitionMatrix& tm,
                               const WeightEnsemble& ens,
                               const Propagation& mode, const Activation& act,
                               std::size_t steps, std::uint64_t trial) {
  if (steps == 0) throw Error(ErrorCode::kInvalidArgument, "T must be >= 1");
  if (mode.kind == PropagationKind::kRs && !(mode.alpha > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "rs needs alpha > 0");
  }
  if (ens.dim() != static_cast<std::size_t>(x0.rows())) {
    throw Error(ErrorCode::kDimensionMismatch,
                "ensemble dimension differs from feature dimension");
  }
  const double log_floor = std::log(SimilarityTrace::kUnderflowFloor);
  SimilarityTrace trace;
  trace.records.reserve(steps + 1);
  FeatureState state = FeatureState::from_features(x0, tm);
  trace.records.push_back(make_record(state));
  for (std::size_t t = 0; t < steps; ++t) {
    const Eigen::MatrixXd w = ens.sample(trial, t);
    state = mode.kind == PropagationKind::kNrs
                ? step_nrs(state, tm, w, act)
                : step_rs(state, tm, w, mode.alpha, act);
    const double lm = state.log_mu();
    if (lm != kNegInf && lm < log_floor) {
      trace.truncated = true;
      break;
    }
    trace.records.push_back(make_record(state));
  }
  return trace;
}

void write_trace_csv(std::ostream& out, const SimilarityTrace& trace) {
  out << "t,mu,log_mu_tilde,log_frob\n";
  char buf[128];
  for (const auto& r : trace.records) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", r.t, r.mu,
                  r.log_mu_tilde, r.log_frob);
    out << buf;
  }
}

SimilarityTrace read_trace_csv(std::istream& in) {
  SimilarityTrace trace;
  std::string line;
  if (!std::getline(in, line) || line != "t,mu,log_mu_tilde,log_frob") {
    throw Error(ErrorCode::kParseError, "line 1: bad trace header");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    TraceRecord r;
    char* end = nullptr;
    const char* p = line.c_str();
    r.t = std::strtoull(p, &end, 10);
    bool ok = *end == ',';
    if (ok) r.mu = std::strtod(end + 1, &end), ok = *end == ',';
    if (ok) r.log_mu_tilde = std::strtod(end + 1, &end), ok = *end == ',';
    if (ok) r.log_frob = std::strtod(end + 1, &end), ok = *end == '\0';
    if (!ok) {
      throw Error(ErrorCode::kParseError,
                  "line " + std::to_string(line_no) + ": malformed trace row");
    }
    trace.records.push_back(r);
  }
  return trace;
}

}  // namespace oversmooth
