#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace acquimech {

// Input probabilities may deviate from 1 by this much before renormalization.
inline constexpr double kProbabilitySumTolerance = 1e-3;
// Acquiring probabilities may leave [0, 1] by this much (LP round-off).
inline constexpr double kEntryTolerance = 1e-9;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    Matrix out(rows.size(), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != cols) {
        throw std::invalid_argument("ragged matrix: row " + std::to_string(r) + " has " +
                                    std::to_string(rows[r].size()) + " entries, expected " +
                                    std::to_string(cols));
      }
      std::copy(rows[r].begin(), rows[r].end(), out.row(r).begin());
    }
    return out;
  }

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    std::vector<std::vector<double>> nested;
    for (const auto& r : rows) nested.emplace_back(r);
    return from_rows(nested);
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> data() const noexcept { return data_; }

  std::vector<std::vector<double>> to_rows() const {
    std::vector<std::vector<double>> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r].assign(row(r).begin(), row(r).end());
    return out;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Quality levels V and score levels S, both strictly ascending.
struct QualityGrid {
  std::vector<double> values;
  std::vector<double> scores;

  std::size_t n() const noexcept { return values.size(); }
  std::size_t m() const noexcept { return scores.size(); }
};

namespace detail {

inline void require_ascending(const std::vector<double>& xs, const char* what) {
  if (xs.empty()) throw std::invalid_argument(std::string(what) + " grid is empty");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i])) {
      throw std::invalid_argument(std::string(what) + " grid has a non-finite entry");
    }
    if (i > 0 && !(xs[i - 1] < xs[i])) {
      throw std::invalid_argument(std::string(what) + " grid is not strictly ascending at index " +
                                  std::to_string(i));
    }
  }
}

// Checks a probability vector and rescales it to sum to exactly 1 (up to
// floating-point rounding of the division).
inline std::vector<double> normalize_distribution(std::vector<double> p, const std::string& what) {
  double total = 0.0;
  for (double x : p) {
    if (!std::isfinite(x) || x < 0.0) {
      throw std::invalid_argument(what + " has a negative or non-finite probability");
    }
    total += x;
  }
  if (std::abs(total - 1.0) > kProbabilitySumTolerance + 1e-12) {
    throw std::invalid_argument(what + " sums to " + std::to_string(total) +
                                ", outside tolerance of 1");
  }
  for (double& x : p) x /= total;
  return p;
}

}  // namespace detail

/// A validated single-item problem: grid, prior d, score model R and bar t.
///
/// The prior and every row of the score model are renormalized on
/// construction, so downstream code can rely on exact row-stochasticity.
class Instance {
 public:
  Instance(QualityGrid grid, std::vector<double> prior, Matrix score_model, double bar)
      : grid_(std::move(grid)), bar_(bar) {
    detail::require_ascending(grid_.values, "quality");
    detail::require_ascending(grid_.scores, "score");
    if (!std::isfinite(bar_)) throw std::invalid_argument("quality bar must be finite");
    if (prior.size() != grid_.n()) {
      throw std::invalid_argument("prior has " + std::to_string(prior.size()) +
                                  " entries but the quality grid has " +
                                  std::to_string(grid_.n()));
    }
    if (score_model.rows() != grid_.n() || score_model.cols() != grid_.m()) {
      throw std::invalid_argument("score model must be " + std::to_string(grid_.n()) + "x" +
                                  std::to_string(grid_.m()));
    }
    prior_ = detail::normalize_distribution(std::move(prior), "prior");
    for (std::size_t v = 0; v < grid_.n(); ++v) {
      auto row = score_model.row(v);
      std::vector<double> normalized = detail::normalize_distribution(
          {row.begin(), row.end()}, "score model row " + std::to_string(v));
      std::copy(normalized.begin(), normalized.end(), row.begin());
    }
    score_model_ = std::move(score_model);
  }

  const QualityGrid& grid() const noexcept { return grid_; }
  const std::vector<double>& prior() const noexcept { return prior_; }
  const Matrix& score_model() const noexcept { return score_model_; }
  double bar() const noexcept { return bar_; }

  std::size_t n() const noexcept { return grid_.n(); }
  std::size_t m() const noexcept { return grid_.m(); }
  double value(std::size_t v) const { return grid_.values.at(v); }
  double score(std::size_t s) const { return grid_.scores.at(s); }
  double r(std::size_t v, std::size_t s) const { return score_model_(v, s); }

  /// (v - t) * d(v): the collector's per-unit gain from acquiring quality v.
  double weight(std::size_t v) const { return (grid_.values[v] - bar_) * prior_[v]; }

 private:
  QualityGrid grid_;
  std::vector<double> prior_;
  Matrix score_model_;
  double bar_ = 0.0;
};

inline Instance validate_instance(std::vector<double> values, std::vector<double> scores,
                                  std::vector<double> prior,
                                  const std::vector<std::vector<double>>& score_model,
                                  double bar) {
  return Instance(QualityGrid{std::move(values), std::move(scores)}, std::move(prior),
                  Matrix::from_rows(score_model), bar);
}

/// Acquiring matrix X: rows are reported qualities, columns are scores.
class Mechanism {
 public:
  Mechanism() = default;
  explicit Mechanism(Matrix matrix, std::string label = {})
      : matrix_(std::move(matrix)), label_(std::move(label)) {
    for (std::size_t r = 0; r < matrix_.rows(); ++r) {
      for (std::size_t c = 0; c < matrix_.cols(); ++c) {
        const double x = matrix_(r, c);
        if (!(x >= -kEntryTolerance && x <= 1.0 + kEntryTolerance)) {
          throw std::invalid_argument("acquiring probability out of [0,1] at (" +
                                      std::to_string(r) + "," + std::to_string(c) + ")");
        }
      }
    }
  }

  static Mechanism zeros(std::size_t n, std::size_t m, std::string label = "zero") {
    return Mechanism(Matrix(n, m, 0.0), std::move(label));
  }
  static Mechanism ones(std::size_t n, std::size_t m, std::string label = "one") {
    return Mechanism(Matrix(n, m, 1.0), std::move(label));
  }

  const Matrix& matrix() const noexcept { return matrix_; }
  const std::string& label() const noexcept { return label_; }
  std::size_t rows() const noexcept { return matrix_.rows(); }
  std::size_t cols() const noexcept { return matrix_.cols(); }
  double operator()(std::size_t v, std::size_t s) const { return matrix_(v, s); }

 private:
  Matrix matrix_;
  std::string label_;
};

inline void require_same_shape(const Instance& instance, const Mechanism& mechanism) {
  if (mechanism.rows() != instance.n() || mechanism.cols() != instance.m()) {
    throw std::invalid_argument("mechanism is " + std::to_string(mechanism.rows()) + "x" +
                                std::to_string(mechanism.cols()) + " but instance is " +
                                std::to_string(instance.n()) + "x" +
                                std::to_string(instance.m()));
  }
}

/// E[v | s]; std::nullopt when score s is unreachable under the prior.
inline std::optional<double> posterior_mean(const Instance& instance, std::size_t score_index) {
  if (score_index >= instance.m()) throw std::out_of_range("score index out of range");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t v = 0; v < instance.n(); ++v) {
    const double mass = instance.prior()[v] * instance.r(v, score_index);
    num += instance.value(v) * mass;
    den += mass;
  }
  if (den <= 0.0) return std::nullopt;
  return num / den;
}

/// Probability that an item of true quality `true_quality` is acquired when
/// its owner reports `reported_quality`.
inline double acquire_probability(const Instance& instance, const Mechanism& mechanism,
                                  std::size_t true_quality, std::size_t reported_quality) {
  require_same_shape(instance, mechanism);
  if (true_quality >= instance.n() || reported_quality >= instance.n()) {
    throw std::out_of_range("quality index out of range");
  }
  double p = 0.0;
  for (std::size_t s = 0; s < instance.m(); ++s) {
    p += mechanism(reported_quality, s) * instance.r(true_quality, s);
  }
  return p;
}

/// Mixed-radix enumeration of k-tuples over {0..radix-1}; the first
/// coordinate is the most significant digit.
class TupleSpace {
 public:
  TupleSpace(std::size_t radix, std::size_t length) : radix_(radix), length_(length) {
    size_ = 1;
    for (std::size_t i = 0; i < length; ++i) size_ *= radix;
    stride_.assign(length, 1);
    for (std::size_t i = length; i-- > 1;) stride_[i - 1] = stride_[i] * radix;
  }

  std::size_t size() const noexcept { return size_; }
  std::size_t length() const noexcept { return length_; }
  std::size_t radix() const noexcept { return radix_; }
  std::size_t stride(std::size_t position) const { return stride_[position]; }

  std::size_t digit(std::size_t index, std::size_t position) const {
    return (index / stride_[position]) % radix_;
  }

  std::vector<std::size_t> decode(std::size_t index) const {
    std::vector<std::size_t> out(length_);
    for (std::size_t i = 0; i < length_; ++i) out[i] = digit(index, i);
    return out;
  }

  std::size_t encode(std::span<const std::size_t> tuple) const {
    std::size_t index = 0;
    for (std::size_t i = 0; i < length_; ++i) index += tuple[i] * stride_[i];
    return index;
  }

 private:
  std::size_t radix_;
  std::size_t length_;
  std::size_t size_ = 1;
  std::vector<std::size_t> stride_;
};

/// k i.i.d. items sharing one grid, prior, score model and bar.
class MultiInstance {
 public:
  MultiInstance(Instance base, std::size_t item_count)
      : base_(std::move(base)), item_count_(item_count) {
    if (item_count_ < 1) throw std::invalid_argument("item count must be at least 1");
  }

  const Instance& base() const noexcept { return base_; }
  std::size_t k() const noexcept { return item_count_; }
  TupleSpace quality_profiles() const { return {base_.n(), item_count_}; }
  TupleSpace score_profiles() const { return {base_.m(), item_count_}; }

  /// Product over items of d(v_j) for quality profile `a`.
  double prior_weight(std::size_t a) const {
    const TupleSpace qs = quality_profiles();
    double p = 1.0;
    for (std::size_t j = 0; j < item_count_; ++j) p *= base_.prior()[qs.digit(a, j)];
    return p;
  }

  /// Product over items of r(v_j, s_j) for quality profile `a`, score profile `b`.
  double score_likelihood(std::size_t a, std::size_t b) const {
    const TupleSpace qs = quality_profiles();
    const TupleSpace ss = score_profiles();
    double p = 1.0;
    for (std::size_t j = 0; j < item_count_; ++j) p *= base_.r(qs.digit(a, j), ss.digit(b, j));
    return p;
  }

 private:
  Instance base_;
  std::size_t item_count_;
};

/// Per-item acquiring tensors x_i(v, s), stored flat with index
/// a * m^k + b for quality profile a and score profile b.
class MultiPolicy {
 public:
  MultiPolicy() = default;
  MultiPolicy(std::size_t k, std::size_t n, std::size_t m, std::string label = {})
      : k_(k), qualities_(n, k), scores_(m, k), label_(std::move(label)) {
    tensors_.assign(k, std::vector<double>(qualities_.size() * scores_.size(), 0.0));
  }

  MultiPolicy(std::size_t k, std::size_t n, std::size_t m,
              std::vector<std::vector<double>> tensors, std::string label = {})
      : MultiPolicy(k, n, m, std::move(label)) {
    if (tensors.size() != k) throw std::invalid_argument("expected one tensor per item");
    for (std::size_t i = 0; i < k; ++i) {
      if (tensors[i].size() != cells()) {
        throw std::invalid_argument("tensor " + std::to_string(i) + " has wrong size");
      }
      for (double x : tensors[i]) {
        if (!(x >= -kEntryTolerance && x <= 1.0 + kEntryTolerance)) {
          throw std::invalid_argument("acquiring probability out of [0,1] in tensor " +
                                      std::to_string(i));
        }
      }
    }
    tensors_ = std::move(tensors);
  }

  std::size_t k() const noexcept { return k_; }
  std::size_t n() const noexcept { return qualities_.radix(); }
  std::size_t m() const noexcept { return scores_.radix(); }
  const TupleSpace& quality_profiles() const noexcept { return qualities_; }
  const TupleSpace& score_profiles() const noexcept { return scores_; }
  std::size_t cells() const noexcept { return qualities_.size() * scores_.size(); }
  const std::string& label() const noexcept { return label_; }
  void set_label(std::string label) { label_ = std::move(label); }

  double at(std::size_t item, std::size_t a, std::size_t b) const {
    return tensors_[item][a * scores_.size() + b];
  }
  double& at(std::size_t item, std::size_t a, std::size_t b) {
    return tensors_[item][a * scores_.size() + b];
  }
  const std::vector<std::vector<double>>& tensors() const noexcept { return tensors_; }

 private:
  std::size_t k_ = 0;
  TupleSpace qualities_{1, 0};
  TupleSpace scores_{1, 0};
  std::vector<std::vector<double>> tensors_;
  std::string label_;
};

inline void require_same_shape(const MultiInstance& instance, const MultiPolicy& policy) {
  if (policy.k() != instance.k() || policy.n() != instance.base().n() ||
      policy.m() != instance.base().m()) {
    throw std::invalid_argument("policy shape does not match the multi-item instance");
  }
}

}  // namespace acquimech
