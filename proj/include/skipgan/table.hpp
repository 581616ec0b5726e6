#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "skipgan/schema.hpp"

namespace skipgan {

/// Raw survey table in schema column order. Categorical cells hold the
/// category index; continuous cells hold the value.
class Table {
 public:
  Table() = default;
  explicit Table(std::size_t cols) : cols_(cols) {}
  Table(std::size_t rows, std::size_t cols) : cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const noexcept { return cols_ == 0 ? 0 : data_.size() / cols_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  int category(std::size_t r, std::size_t c) const { return static_cast<int>(data_[r * cols_ + c]); }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  void append_row(std::span<const double> values);
  void reserve(std::size_t rows) { data_.reserve(rows * cols_); }

  /// Rows at `indices`, in that order.
  Table select(std::span<const std::size_t> indices) const;
  /// Column values as a vector.
  std::vector<double> column(std::size_t c) const;

  friend bool operator==(const Table&, const Table&) = default;

 private:
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Throws ValidationError if any cell is outside its feature's domain.
void validate_table(const SurveySchema& schema, const Table& table);

/// Delimited text with a header row of feature names (any order). BLANK is
/// an empty field; a missing value of a non-omissible feature is a
/// ValidationError.
Table read_table(const SurveySchema& schema, std::istream& in, char delimiter = ',');
Table read_table(const SurveySchema& schema, const std::string& path, char delimiter = ',');
void write_table(const SurveySchema& schema, const Table& table, std::ostream& out, char delimiter = ',');
void write_table(const SurveySchema& schema, const Table& table, const std::string& path, char delimiter = ',');

/// Empirical pmf of the target over its categories.
std::vector<double> target_pmf(const SurveySchema& schema, const Table& table);

}  // namespace skipgan
