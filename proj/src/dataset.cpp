#include "cpt/dataset.hpp"
#include "cpt/design.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace cpt {

namespace {

std::string trim(std::string_view s)
{
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos)
    return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_row(const std::string& line)
{
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell += c;
    }
  }
  cells.push_back(trim(cell));
  return cells;
}

std::string lower(std::string s)
{
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::optional<int> parse_binary(const std::string& token)
{
  const std::string t = lower(token);
  if (t == "1" || t == "true" || t == "yes" || t == "t")
    return 1;
  if (t == "0" || t == "false" || t == "no" || t == "f")
    return 0;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec == std::errc() && ptr == t.data() + t.size() && (v == 0.0 || v == 1.0))
    return static_cast<int>(v);
  return std::nullopt;
}

std::optional<double> parse_real(const std::string& token)
{
  if (token.empty())
    return std::nullopt;
  const char* begin = token.data();
  if (*begin == '+')
    ++begin;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size())
    return std::nullopt;
  return v;
}

std::string format_real(double v)
{
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

bool is_missing(const std::string& cell)
{
  const std::string t = lower(cell);
  return t.empty() || t == "na" || t == "nan" || t == "null";
}

} // namespace

void validate(const Dataset& d)
{
  if (d.n() < 2)
    throw DataError("dataset needs at least 2 rows, got " + std::to_string(d.n()));
  if (d.p() < 1)
    throw DataError("dataset needs at least 1 covariate column");
  if (d.treatment.size() != d.n())
    throw DataError("treatment length " + std::to_string(d.treatment.size()) +
                    " does not match " + std::to_string(d.n()) + " rows");
  if (!d.column_names.empty() && static_cast<Eigen::Index>(d.column_names.size()) != d.p())
    throw DataError("column name count does not match covariate columns");
  for (Eigen::Index i = 0; i < d.n(); ++i)
    if (d.treatment(i) != 0 && d.treatment(i) != 1)
      throw DataError("treatment must be 0/1 (row " + std::to_string(i + 1) + ")");
  const auto l = d.n_treated();
  if (l == 0 || l == d.n())
    throw DataError("degenerate treatment vector: all units are " +
                    std::string(l == 0 ? "control" : "treated"));
  if (!d.covariates.allFinite())
    throw DataError("covariates contain non-finite values");
  if (d.blocks) {
    const Blocks& b = *d.blocks;
    if (static_cast<Eigen::Index>(b.codes.size()) != d.n())
      throw DataError("block labels do not match row count");
    std::vector<int> sizes(b.count(), 0);
    for (int c : b.codes) {
      if (c < 0 || static_cast<std::size_t>(c) >= b.count())
        throw DataError("block code out of range");
      ++sizes[static_cast<std::size_t>(c)];
    }
    for (std::size_t k = 0; k < sizes.size(); ++k)
      if (sizes[k] < 2)
        throw DataError("block '" + b.names[k] + "' has a single unit");
  }
}

Blocks make_blocks(const std::vector<std::string>& labels)
{
  Blocks b;
  std::map<std::string, int> index;
  b.codes.reserve(labels.size());
  for (const auto& label : labels) {
    auto [it, inserted] = index.try_emplace(label, static_cast<int>(b.names.size()));
    if (inserted)
      b.names.push_back(label);
    b.codes.push_back(it->second);
  }
  return b;
}

Dataset make_dataset(Matrix covariates, Labels treatment, std::optional<Blocks> blocks,
                     std::vector<std::string> column_names)
{
  if (column_names.empty())
    for (Eigen::Index j = 0; j < covariates.cols(); ++j)
      column_names.push_back("x" + std::to_string(j + 1));
  Dataset d{std::move(covariates), std::move(treatment), std::move(blocks),
            std::move(column_names)};
  validate(d);
  return d;
}

Matrix standardize(const Matrix& x)
{
  Matrix out = x.rowwise() - x.colwise().mean();
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const double sd = std::sqrt(out.col(j).squaredNorm() / static_cast<double>(out.rows()));
    if (sd > 0.0)
      out.col(j) /= sd;
  }
  return out;
}

Dataset parse_csv(const std::string& text, const CsvOptions& options)
{
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line))
    if (!trim(line).empty())
      header = split_row(line);
  if (header.empty())
    throw DataError("CSV has no header row");

  auto find_column = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };

  const auto treat_col = find_column(options.treatment_column);
  if (!treat_col)
    throw DataError("treatment column '" + options.treatment_column + "' not found");
  std::optional<std::size_t> block_col;
  if (options.block_column) {
    block_col = find_column(*options.block_column);
    if (!block_col)
      throw DataError("block column '" + *options.block_column + "' not found");
  }
  std::set<std::size_t> one_hot_cols;
  for (const auto& name : options.one_hot) {
    const auto c = find_column(name);
    if (!c)
      throw DataError("one-hot column '" + name + "' not found");
    one_hot_cols.insert(*c);
  }

  std::vector<std::vector<std::string>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty())
      continue;
    auto cells = split_row(line);
    if (cells.size() != header.size())
      throw DataError("row " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(cells.size()));
    rows.push_back(std::move(cells));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());

  // Output columns in file order; one-hot columns expand in place.
  struct OutColumn
  {
    std::size_t source;
    std::optional<std::string> level;
    std::string name;
  };
  std::vector<OutColumn> columns;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == *treat_col || (block_col && c == *block_col))
      continue;
    if (one_hot_cols.count(c)) {
      std::set<std::string> levels;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (is_missing(rows[r][c]))
          throw DataError("missing value at row " + std::to_string(r + 2) + ", column '" +
                          header[c] + "'");
        levels.insert(rows[r][c]);
      }
      for (auto it = std::next(levels.begin(), levels.empty() ? 0 : 1); it != levels.end(); ++it)
        columns.push_back({c, *it, header[c] + "=" + *it});
    } else {
      columns.push_back({c, std::nullopt, header[c]});
    }
  }

  Dataset d;
  d.covariates.resize(n, static_cast<Eigen::Index>(columns.size()));
  d.treatment.resize(n);
  std::vector<std::string> block_labels;
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& cells = rows[static_cast<std::size_t>(r)];
    const std::string where = "row " + std::to_string(r + 2);
    const auto t = parse_binary(cells[*treat_col]);
    if (!t)
      throw DataError(where + ": invalid treatment value '" + cells[*treat_col] + "' in column '" +
                      options.treatment_column + "'");
    d.treatment(r) = *t;
    if (block_col) {
      if (is_missing(cells[*block_col]))
        throw DataError(where + ": missing block label");
      block_labels.push_back(cells[*block_col]);
    }
    for (std::size_t j = 0; j < columns.size(); ++j) {
      const auto& col = columns[j];
      const std::string& cell = cells[col.source];
      double value = 0.0;
      if (col.level) {
        value = cell == *col.level ? 1.0 : 0.0;
      } else {
        if (is_missing(cell))
          throw DataError(where + ", column '" + header[col.source] + "': missing value");
        const auto v = parse_real(cell);
        if (!v || !std::isfinite(*v))
          throw DataError(where + ", column '" + header[col.source] +
                          "': non-numeric or non-finite value '" + cell + "'");
        value = *v;
      }
      d.covariates(r, static_cast<Eigen::Index>(j)) = value;
    }
  }
  for (const auto& col : columns)
    d.column_names.push_back(col.name);
  if (block_col)
    d.blocks = make_blocks(block_labels);
  if (options.standardize)
    d.covariates = standardize(d.covariates);
  validate(d);
  return d;
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), options);
}

std::string to_csv(const Dataset& d, const std::string& treatment_column,
                   const std::string& block_column)
{
  std::string out;
  for (const auto& name : d.column_names)
    out += name + ",";
  out += treatment_column;
  if (d.blocks)
    out += "," + block_column;
  out += "\n";
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    for (Eigen::Index j = 0; j < d.p(); ++j)
      out += format_real(d.covariates(i, j)) + ",";
    out += std::to_string(d.treatment(i));
    if (d.blocks)
      out += "," + d.blocks->names[static_cast<std::size_t>(d.blocks->codes[static_cast<std::size_t>(i)])];
    out += "\n";
  }
  return out;
}

void write_csv(const Dataset& d, const std::filesystem::path& path,
               const std::string& treatment_column, const std::string& block_column)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw DataError("cannot write '" + path.string() + "'");
  out << to_csv(d, treatment_column, block_column);
}

std::string_view to_string(DesignKind kind)
{
  switch (kind) {
  case DesignKind::main_effects:
    return "main";
  case DesignKind::two_way:
    return "two-way";
  case DesignKind::two_way_squares:
    return "two-way+squares";
  }
  return "main";
}

std::vector<std::string> design_feature_names(const std::vector<std::string>& names,
                                              DesignKind kind)
{
  std::vector<std::string> out = names;
  if (kind == DesignKind::main_effects)
    return out;
  for (std::size_t j = 0; j < names.size(); ++j)
    for (std::size_t k = j + 1; k < names.size(); ++k)
      out.push_back(names[j] + ":" + names[k]);
  if (kind == DesignKind::two_way_squares)
    for (const auto& name : names)
      out.push_back(name + "^2");
  return out;
}

DesignMatrix expand_design(const Dataset& d, DesignKind kind)
{
  return {expand_design(d.covariates, kind), design_feature_names(d.column_names, kind), kind};
}

} // namespace cpt
