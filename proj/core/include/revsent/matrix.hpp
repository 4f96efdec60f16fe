#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "revsent/features.hpp"

namespace revsent {

// Dense row-major sample matrix.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  // Throws std::invalid_argument on ragged input.
  static FeatureMatrix from_rows(const std::vector<std::vector<double>>& rows);
  static FeatureMatrix from_vectors(std::span<const FeatureVector> vectors);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

  // Rows at the given indices, in that order (duplicates allowed).
  FeatureMatrix select_rows(std::span<const std::size_t> indices) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline FeatureMatrix FeatureMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  FeatureMatrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols_) throw std::invalid_argument("ragged feature rows");
    std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  }
  return m;
}

inline FeatureMatrix FeatureMatrix::from_vectors(std::span<const FeatureVector> vectors) {
  FeatureMatrix m(vectors.size(), vectors.empty() ? 0 : vectors.front().dim());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].dim() != m.cols_) throw std::invalid_argument("feature vectors differ in dimension");
    std::copy(vectors[i].values.begin(), vectors[i].values.end(), m.row(i).begin());
  }
  return m;
}

inline FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> indices) const {
  FeatureMatrix m(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), m.row(i).begin());
  }
  return m;
}

}  // namespace revsent
