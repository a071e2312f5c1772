#include "bigraph/params.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bigraph/error.hpp"
#include "bigraph/theory.hpp"

namespace bigraph {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::AsymmetricMatrix: return "AsymmetricMatrix";
    case ErrorCode::ProbabilityOutOfRange: return "ProbabilityOutOfRange";
    case ErrorCode::InvalidCounts: return "InvalidCounts";
    case ErrorCode::UnsupportedK: return "UnsupportedK";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NonpositiveDenominator: return "NonpositiveDenominator";
    case ErrorCode::InvalidEpsilon: return "InvalidEpsilon";
    case ErrorCode::CapacityExceeded: return "CapacityExceeded";
    case ErrorCode::InvalidReduction: return "InvalidReduction";
    case ErrorCode::InvalidStopConfig: return "InvalidStopConfig";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::Divergent: return "Divergent";
    case ErrorCode::RegimeMismatch: return "RegimeMismatch";
    case ErrorCode::OmegaTooSmall: return "OmegaTooSmall";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

std::string_view to_string(Criticality c) {
  switch (c) {
    case Criticality::Subcritical: return "subcritical";
    case Criticality::Critical: return "critical";
    case Criticality::Supercritical: return "supercritical";
  }
  return "unknown";
}

namespace {

std::vector<double> flatten(std::initializer_list<std::initializer_list<double>> rows,
                            std::size_t& k) {
  k = rows.size();
  std::vector<double> out;
  out.reserve(k * k);
  for (const auto& row : rows) {
    if (row.size() != k) throw Error(ErrorCode::DimensionMismatch, "probability matrix must be square");
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

}  // namespace

ProbMatrix::ProbMatrix(std::size_t k, std::vector<double> row_major) : k_(k), p_(std::move(row_major)) {
  if (k_ == 0 || p_.size() != k_ * k_) {
    throw Error(ErrorCode::DimensionMismatch, "probability matrix must be a non-empty k x k matrix");
  }
  for (std::size_t i = 0; i < k_; ++i) {
    for (std::size_t j = 0; j < k_; ++j) {
      const double v = p_[i * k_ + j];
      if (!(v >= 0.0 && v <= 1.0)) {
        std::ostringstream os;
        os << "p[" << i << "][" << j << "] = " << v << " is not in [0,1]";
        throw Error(ErrorCode::ProbabilityOutOfRange, os.str());
      }
      if (v != p_[j * k_ + i]) {
        std::ostringstream os;
        os << "p[" << i << "][" << j << "] != p[" << j << "][" << i << "]";
        throw Error(ErrorCode::AsymmetricMatrix, os.str());
      }
    }
  }
}

ProbMatrix::ProbMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : ProbMatrix(rows.size(), [&] {
        std::size_t k = 0;
        return flatten(rows, k);
      }()) {}

ProbMatrix ProbMatrix::from_mat2(const Mat2& m) {
  return ProbMatrix(2, {m[0][0], m[0][1], m[1][0], m[1][1]});
}

Mat2 ProbMatrix::as_mat2() const {
  if (k_ != 2) throw Error(ErrorCode::UnsupportedK, "two-type matrix required");
  return {{{p_[0], p_[1]}, {p_[2], p_[3]}}};
}

ProbMatrix ProbMatrix::scaled(double c) const {
  std::vector<double> out(p_);
  for (double& v : out) v *= c;
  return ProbMatrix(k_, std::move(out));
}

TypeCounts::TypeCounts(std::vector<std::int64_t> n) : n_(std::move(n)) {
  if (n_.empty()) throw Error(ErrorCode::InvalidCounts, "at least one type is required");
  for (std::int64_t v : n_) {
    if (v < 1) throw Error(ErrorCode::InvalidCounts, "every type needs at least one vertex");
    total_ += v;
  }
}

TypeCounts::TypeCounts(std::initializer_list<std::int64_t> n) : TypeCounts(std::vector<std::int64_t>(n)) {}

std::int64_t TypeCounts::offset(std::size_t i) const noexcept {
  std::int64_t off = 0;
  for (std::size_t t = 0; t < i; ++t) off += n_[t];
  return off;
}

ExpectationMatrix::ExpectationMatrix(std::size_t k, std::vector<double> mu) : k_(k), mu_(std::move(mu)) {
  if (k_ == 0 || mu_.size() != k_ * k_) {
    throw Error(ErrorCode::DimensionMismatch, "expectation matrix must be k x k");
  }
  for (double v : mu_) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::InvalidArgument, "expectation entries must be finite and nonnegative");
    }
  }
}

ExpectationMatrix ExpectationMatrix::from_mat2(const Mat2& m) {
  return ExpectationMatrix(2, {m[0][0], m[0][1], m[1][0], m[1][1]});
}

Mat2 ExpectationMatrix::as_mat2() const {
  if (k_ != 2) throw Error(ErrorCode::UnsupportedK, "two-type matrix required");
  return {{{mu_[0], mu_[1]}, {mu_[2], mu_[3]}}};
}

double ExpectationMatrix::row_sum(std::size_t i) const noexcept {
  double s = 0.0;
  for (std::size_t j = 0; j < k_; ++j) s += mu_[i * k_ + j];
  return s;
}

ExpectationMatrix validate(const ProbMatrix& p, const TypeCounts& n) {
  if (p.k() != n.k()) {
    throw Error(ErrorCode::DimensionMismatch, "P and n disagree on the number of types");
  }
  const std::size_t k = p.k();
  std::vector<double> mu(k * k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) mu[i * k + j] = p(i, j) * static_cast<double>(n[j]);
  }
  return ExpectationMatrix(k, std::move(mu));
}

Criticality classify(double lambda) {
  if (lambda > 1.0 + kCriticalityTol) return Criticality::Supercritical;
  if (lambda < 1.0 - kCriticalityTol) return Criticality::Subcritical;
  return Criticality::Critical;
}

RegimeReport diagnose(const ExpectationMatrix& m, const TypeCounts& n) {
  if (m.k() != 2 || n.k() != 2) {
    throw Error(ErrorCode::UnsupportedK, "regime diagnostics are defined for two types only");
  }
  RegimeReport r;
  r.lambda = theory::perron_frobenius(m);
  r.epsilon = r.lambda - 1.0;
  r.row_sums = {m.row_sum(0), m.row_sum(1)};
  const double eps = r.epsilon;
  const double n2 = static_cast<double>(n[1]);
  r.condition_sub = eps * eps * eps * n2;
  const double alpha = eps > 0.0 ? std::min(1.0, m(1, 0) / eps) : 1.0;
  r.condition_super = r.condition_sub * alpha;
  r.classification = classify(r.lambda);
  return r;
}

ProbMatrix row_sum_instance(const TypeCounts& n, double row_sum, double mu21) {
  if (n.k() != 2) throw Error(ErrorCode::UnsupportedK, "row-sum instances are two-type");
  if (!(row_sum >= 0.0) || !(mu21 >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "row sum and mu21 must be nonnegative");
  }
  const double n1 = static_cast<double>(n[0]);
  const double n2 = static_cast<double>(n[1]);
  const double mu12 = mu21 * n2 / n1;
  const double mu11 = row_sum - mu12;
  const double mu22 = row_sum - mu21;
  if (mu11 < 0.0 || mu22 < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "cross-type mean exceeds the requested row sum");
  }
  const double p12 = mu21 / n1;
  return ProbMatrix(2, {mu11 / n1, p12, p12, mu22 / n2});
}

ProbMatrix swap_types(const ProbMatrix& p) {
  const std::size_t k = p.k();
  if (k != 2) throw Error(ErrorCode::UnsupportedK, "type swap is two-type");
  return ProbMatrix(2, {p(1, 1), p(1, 0), p(0, 1), p(0, 0)});
}

TypeCounts swap_types(const TypeCounts& n) {
  if (n.k() != 2) throw Error(ErrorCode::UnsupportedK, "type swap is two-type");
  return TypeCounts{n[1], n[0]};
}

}  // namespace bigraph
