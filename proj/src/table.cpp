#include "skipgan/table.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "skipgan/error.hpp"

namespace skipgan {

namespace {

std::vector<std::string> split_record(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == delim) {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string quote_if_needed(const std::string& s, char delim) {
  if (s.find(delim) == std::string::npos && s.find('"') == std::string::npos && s.find('\n') == std::string::npos) {
    return s;
  }
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

void Table::append_row(std::span<const double> values) {
  if (values.size() != cols_) throw ValidationError("row width " + std::to_string(values.size()) + " != " + std::to_string(cols_));
  data_.insert(data_.end(), values.begin(), values.end());
}

Table Table::select(std::span<const std::size_t> indices) const {
  Table out(cols_);
  out.reserve(indices.size());
  for (auto i : indices) out.append_row(row(i));
  return out;
}

std::vector<double> Table::column(std::size_t c) const {
  std::vector<double> out(rows());
  for (std::size_t r = 0; r < rows(); ++r) out[r] = (*this)(r, c);
  return out;
}

void validate_table(const SurveySchema& schema, const Table& table) {
  if (table.cols() != static_cast<std::size_t>(schema.num_features())) {
    throw ValidationError("table has " + std::to_string(table.cols()) + " columns, schema has " +
                          std::to_string(schema.num_features()) + " features");
  }
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (int f = 0; f < schema.num_features(); ++f) {
      const double v = table(r, static_cast<std::size_t>(f));
      const auto& spec = schema.feature(f);
      if (!std::isfinite(v)) throw ValidationError("row " + std::to_string(r) + ": non-finite value in '" + spec.name + "'");
      if (spec.is_categorical()) {
        if (v != std::floor(v) || v < 0 || v >= spec.cardinality()) {
          throw ValidationError("row " + std::to_string(r) + ": invalid category index in '" + spec.name + "'");
        }
      }
    }
  }
}

Table read_table(const SurveySchema& schema, std::istream& in, char delimiter) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("table has no header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_record(line, delimiter);
  const int n = schema.num_features();
  std::vector<int> column_of(static_cast<std::size_t>(n), -1);
  for (std::size_t c = 0; c < header.size(); ++c) {
    auto f = schema.find_feature(header[c]);
    if (!f) throw ValidationError("table column '" + header[c] + "' is not a schema feature");
    if (column_of[static_cast<std::size_t>(*f)] != -1) throw ValidationError("duplicate table column '" + header[c] + "'");
    column_of[static_cast<std::size_t>(*f)] = static_cast<int>(c);
  }
  for (int f = 0; f < n; ++f) {
    if (column_of[static_cast<std::size_t>(f)] < 0) {
      throw ValidationError("table is missing feature '" + schema.feature(f).name + "'");
    }
  }

  Table table(static_cast<std::size_t>(n));
  std::vector<double> row(static_cast<std::size_t>(n));
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_record(line, delimiter);
    if (fields.size() != header.size()) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                            " fields, got " + std::to_string(fields.size()));
    }
    for (int f = 0; f < n; ++f) {
      const auto& spec = schema.feature(f);
      const std::string& field = fields[static_cast<std::size_t>(column_of[static_cast<std::size_t>(f)])];
      const std::string where = "line " + std::to_string(line_no) + ", feature '" + spec.name + "'";
      if (spec.is_categorical()) {
        if (field.empty()) {
          if (!spec.omissible) throw ValidationError(where + ": missing value for a non-omissible feature");
          row[static_cast<std::size_t>(f)] = spec.blank_index();
          continue;
        }
        auto k = schema.find_category(f, field);
        if (!k || (spec.omissible && *k == spec.blank_index())) {
          throw ValidationError(where + ": unknown category '" + field + "'");
        }
        row[static_cast<std::size_t>(f)] = *k;
      } else {
        if (field.empty()) throw ValidationError(where + ": missing continuous value");
        double v = 0;
        auto res = std::from_chars(field.data(), field.data() + field.size(), v);
        if (res.ec != std::errc{} || res.ptr != field.data() + field.size() || !std::isfinite(v)) {
          throw ValidationError(where + ": not a number '" + field + "'");
        }
        row[static_cast<std::size_t>(f)] = v;
      }
    }
    table.append_row(row);
  }
  return table;
}

Table read_table(const SurveySchema& schema, const std::string& path, char delimiter) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open table file '" + path + "'");
  return read_table(schema, in, delimiter);
}

void write_table(const SurveySchema& schema, const Table& table, std::ostream& out, char delimiter) {
  validate_table(schema, table);
  const int n = schema.num_features();
  for (int f = 0; f < n; ++f) {
    if (f) out << delimiter;
    out << quote_if_needed(schema.feature(f).name, delimiter);
  }
  out << '\n';
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (int f = 0; f < n; ++f) {
      if (f) out << delimiter;
      const auto& spec = schema.feature(f);
      if (spec.is_categorical()) {
        const int k = table.category(r, static_cast<std::size_t>(f));
        if (k != spec.blank_index()) out << quote_if_needed(spec.categories[static_cast<std::size_t>(k)], delimiter);
      } else {
        out << format_double(table(r, static_cast<std::size_t>(f)));
      }
    }
    out << '\n';
  }
}

void write_table(const SurveySchema& schema, const Table& table, const std::string& path, char delimiter) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write table file '" + path + "'");
  write_table(schema, table, out, delimiter);
}

std::vector<double> target_pmf(const SurveySchema& schema, const Table& table) {
  const int y = schema.target_index();
  std::vector<double> pmf(static_cast<std::size_t>(schema.feature(y).cardinality()), 0.0);
  if (table.rows() == 0) return pmf;
  for (std::size_t r = 0; r < table.rows(); ++r) pmf[static_cast<std::size_t>(table.category(r, static_cast<std::size_t>(y)))] += 1.0;
  for (auto& p : pmf) p /= static_cast<double>(table.rows());
  return pmf;
}

}  // namespace skipgan
