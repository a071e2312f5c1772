#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string_view>
#include <vector>

namespace bigraph {

using Mat2 = std::array<std::array<double, 2>, 2>;
using Count2 = std::array<std::int64_t, 2>;

/// Symmetric k x k matrix of edge probabilities, stored row-major.
/// Construction rejects asymmetric input (bit-exact comparison) and entries
/// outside [0,1].
class ProbMatrix {
 public:
  ProbMatrix(std::size_t k, std::vector<double> row_major);
  ProbMatrix(std::initializer_list<std::initializer_list<double>> rows);
  static ProbMatrix from_mat2(const Mat2& m);

  std::size_t k() const noexcept { return k_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return p_[i * k_ + j]; }
  const std::vector<double>& data() const noexcept { return p_; }
  Mat2 as_mat2() const;

  /// Entrywise scaling by c; the result must still be a probability matrix.
  ProbMatrix scaled(double c) const;

 private:
  std::size_t k_;
  std::vector<double> p_;
};

/// Vertex counts per type. Type-1 vertices come first in every id layout.
class TypeCounts {
 public:
  explicit TypeCounts(std::vector<std::int64_t> n);
  TypeCounts(std::initializer_list<std::int64_t> n);

  std::size_t k() const noexcept { return n_.size(); }
  std::int64_t operator[](std::size_t i) const noexcept { return n_[i]; }
  std::int64_t total() const noexcept { return total_; }
  const std::vector<std::int64_t>& data() const noexcept { return n_; }
  /// First vertex id of type i in the contiguous block layout.
  std::int64_t offset(std::size_t i) const noexcept;

 private:
  std::vector<std::int64_t> n_;
  std::int64_t total_ = 0;
};

/// mu[i][j] = p[i][j] * n[j]: expected number of type-j neighbours of a
/// type-i vertex. Not symmetric in general.
class ExpectationMatrix {
 public:
  ExpectationMatrix(std::size_t k, std::vector<double> mu);
  static ExpectationMatrix from_mat2(const Mat2& m);

  std::size_t k() const noexcept { return k_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return mu_[i * k_ + j]; }
  const std::vector<double>& data() const noexcept { return mu_; }
  Mat2 as_mat2() const;
  double row_sum(std::size_t i) const noexcept;

 private:
  std::size_t k_;
  std::vector<double> mu_;
};

enum class Criticality { Subcritical, Critical, Supercritical };

std::string_view to_string(Criticality c);

inline constexpr double kCriticalityTol = 1e-9;

struct RegimeReport {
  double lambda = 0.0;
  double epsilon = 0.0;
  std::vector<double> row_sums;
  /// eps^3 * n2 * min{1, mu21/eps}; for eps <= 0 the min factor is taken as 1.
  double condition_super = 0.0;
  /// eps^3 * n2
  double condition_sub = 0.0;
  Criticality classification = Criticality::Critical;
};

ExpectationMatrix validate(const ProbMatrix& p, const TypeCounts& n);

/// Two-type only. Uses the literal second type for n2 and mu21, whatever the
/// ordering of n.
RegimeReport diagnose(const ExpectationMatrix& m, const TypeCounts& n);

Criticality classify(double lambda);

/// Two-type instance whose expectation matrix has both row sums equal to
/// `row_sum` and cross-type mean mu21 = p12 * n1.
ProbMatrix row_sum_instance(const TypeCounts& n, double row_sum, double mu21);

/// Type-swapped instance: conjugates P by the transposition (1 2).
ProbMatrix swap_types(const ProbMatrix& p);
TypeCounts swap_types(const TypeCounts& n);

}  // namespace bigraph
