#include "bmilasso/stack_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bmilasso {

namespace {

[[noreturn]] void fail(const std::string& message) {
  throw std::runtime_error("stack_io: " + message);
}

std::string cell_context(const std::string& path, std::size_t line,
                         std::size_t col) {
  return path + ":" + std::to_string(line) + " column " + std::to_string(col + 1);
}

double parse_number(const std::string& cell, const std::string& path,
                    std::size_t line, std::size_t col) {
  if (cell.empty()) fail("empty cell at " + cell_context(path, line, col));
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end != cell.c_str() + cell.size() || errno == ERANGE || !std::isfinite(v))
    fail("non-numeric cell '" + cell + "' at " + cell_context(path, line, col));
  return v;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;  // parsed numeric body
};

RawTable read_numeric_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '" + path + "'");
  RawTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
    const auto cells = split_line(line);
    if (line_no == 1) {
      table.header = cells;
      continue;
    }
    if (cells.size() != table.header.size())
      fail("row at " + path + ":" + std::to_string(line_no) + " has " +
           std::to_string(cells.size()) + " cells, header has " +
           std::to_string(table.header.size()));
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c)
      row[c] = parse_number(cells[c], path, line_no, c);
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) fail("'" + path + "' is empty");
  if (table.rows.empty()) fail("'" + path + "' has a header but no data rows");
  return table;
}

Dataset dataset_from_columns(const std::vector<std::string>& names,
                             const std::vector<std::vector<double>>& rows,
                             std::size_t y_col, std::size_t first_x_col) {
  Dataset ds;
  const std::size_t n = rows.size();
  const std::size_t p = names.size();
  ds.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  ds.y.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    ds.y(static_cast<Eigen::Index>(i)) = rows[i][y_col];
    for (std::size_t j = 0; j < p; ++j)
      ds.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][first_x_col + j];
  }
  ds.column_names = names;
  ds.column_kinds = infer_column_kinds(ds.x);
  return ds;
}

}  // namespace

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '" + path + "'");
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
    rows.push_back(split_line(line));
  }
  return rows;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write '" + path + "'");
  out << content;
  if (!out) fail("failed while writing '" + path + "'");
}

LoadResult load_stack_long(const std::string& path) {
  const RawTable table = read_numeric_csv(path);
  if (table.header.size() < 3)
    fail("'" + path + "' needs at least .imp, y and one covariate column");
  if (table.header[0] != ".imp")
    fail("'" + path + "' first column must be '.imp', got '" + table.header[0] +
         "'");
  if (table.header[1] != "y")
    fail("'" + path + "' second column must be 'y', got '" + table.header[1] +
         "'");
  const std::vector<std::string> names(table.header.begin() + 2,
                                       table.header.end());

  int d_max = 0;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const double imp = table.rows[i][0];
    if (imp != std::floor(imp) || imp < 1.0)
      fail("'" + path + "' row " + std::to_string(i + 2) +
           ": .imp must be a positive integer");
    d_max = std::max(d_max, static_cast<int>(imp));
  }

  std::vector<std::vector<std::vector<double>>> grouped(
      static_cast<std::size_t>(d_max));
  for (const auto& row : table.rows)
    grouped[static_cast<std::size_t>(row[0]) - 1].push_back(row);

  LoadResult result;
  result.stack.provenance = StackProvenance::Loaded;
  const std::size_t n = grouped.front().size();
  for (int d = 0; d < d_max; ++d) {
    const auto& rows = grouped[static_cast<std::size_t>(d)];
    if (rows.empty())
      fail("'" + path + "': no rows for imputation " + std::to_string(d + 1));
    if (rows.size() != n)
      fail("'" + path + "': imputation " + std::to_string(d + 1) + " has " +
           std::to_string(rows.size()) + " rows, imputation 1 has " +
           std::to_string(n));
    result.stack.datasets.push_back(dataset_from_columns(names, rows, 1, 2));
  }
  result.stack.validate();
  if (d_max == 1)
    result.warnings.push_back(
        "'" + path +
        "': single imputation (D = 1); between-imputation grouping is inert");
  return result;
}

LoadResult load_stack_multi(const std::string& stem, int count) {
  if (count < 1) fail("multi-file load requires count >= 1");
  LoadResult result;
  result.stack.provenance = StackProvenance::Loaded;
  for (int d = 1; d <= count; ++d) {
    const std::string path = stem + "_" + std::to_string(d) + ".csv";
    const RawTable table = read_numeric_csv(path);
    if (table.header.size() < 2)
      fail("'" + path + "' needs y and at least one covariate column");
    if (table.header[0] != "y")
      fail("'" + path + "' first column must be 'y', got '" + table.header[0] +
           "'");
    const std::vector<std::string> names(table.header.begin() + 1,
                                         table.header.end());
    result.stack.datasets.push_back(
        dataset_from_columns(names, table.rows, 0, 1));
  }
  result.stack.validate();
  if (count == 1)
    result.warnings.push_back(
        "'" + stem +
        "_1.csv': single imputation (D = 1); between-imputation grouping is "
        "inert");
  return result;
}

void emit_stack_long(const ImputedStack& stack, const std::string& path) {
  stack.validate();
  std::ostringstream out;
  out << ".imp,y";
  for (const auto& name : stack.column_names()) out << ',' << name;
  out << '\n';
  for (int d = 0; d < stack.count(); ++d) {
    const Dataset& ds = stack.datasets[static_cast<std::size_t>(d)];
    for (int i = 0; i < ds.n(); ++i) {
      out << (d + 1) << ',' << format_double(ds.y(i));
      for (int j = 0; j < ds.p(); ++j) out << ',' << format_double(ds.x(i, j));
      out << '\n';
    }
  }
  write_text_file(path, out.str());
}

void emit_stack_multi(const ImputedStack& stack, const std::string& stem) {
  stack.validate();
  for (int d = 0; d < stack.count(); ++d) {
    const Dataset& ds = stack.datasets[static_cast<std::size_t>(d)];
    std::ostringstream out;
    out << 'y';
    for (const auto& name : ds.column_names) out << ',' << name;
    out << '\n';
    for (int i = 0; i < ds.n(); ++i) {
      out << format_double(ds.y(i));
      for (int j = 0; j < ds.p(); ++j) out << ',' << format_double(ds.x(i, j));
      out << '\n';
    }
    write_text_file(stem + "_" + std::to_string(d + 1) + ".csv", out.str());
  }
}

IncompleteDataset load_incomplete(const std::string& data_path,
                                  const std::string& mask_path) {
  const RawTable data = read_numeric_csv(data_path);
  if (data.header.size() < 2)
    fail("'" + data_path + "' needs y and at least one covariate column");
  if (data.header[0] != "y")
    fail("'" + data_path + "' first column must be 'y', got '" +
         data.header[0] + "'");
  const std::vector<std::string> names(data.header.begin() + 1,
                                       data.header.end());

  const RawTable mask = read_numeric_csv(mask_path);
  if (mask.header != names)
    fail("'" + mask_path + "' header must match the covariate names of '" +
         data_path + "'");
  if (mask.rows.size() != data.rows.size())
    fail("'" + mask_path + "' row count differs from '" + data_path + "'");

  IncompleteDataset out;
  const std::size_t n = data.rows.size();
  const std::size_t p = names.size();
  out.mask.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      const double v = mask.rows[i][j];
      if (v != 0.0 && v != 1.0)
        fail("'" + mask_path + "' row " + std::to_string(i + 2) +
             ": mask entries must be 0 or 1");
      out.mask(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          static_cast<std::uint8_t>(v);
    }
  }
  out.data = dataset_from_columns(names, data.rows, 0, 1);
  out.data.column_kinds = infer_column_kinds(out.data.x, &out.mask);
  out.validate();
  return out;
}

void emit_incomplete(const IncompleteDataset& data,
                     const std::string& data_path,
                     const std::string& mask_path) {
  data.validate();
  {
    std::ostringstream out;
    out << 'y';
    for (const auto& name : data.data.column_names) out << ',' << name;
    out << '\n';
    for (int i = 0; i < data.n(); ++i) {
      out << format_double(data.data.y(i));
      for (int j = 0; j < data.p(); ++j) {
        const double v = data.mask(i, j) != 0 ? data.data.x(i, j) : 0.0;
        out << ',' << format_double(v);
      }
      out << '\n';
    }
    write_text_file(data_path, out.str());
  }
  {
    std::ostringstream out;
    bool first = true;
    for (const auto& name : data.data.column_names) {
      if (!first) out << ',';
      out << name;
      first = false;
    }
    out << '\n';
    for (int i = 0; i < data.n(); ++i) {
      for (int j = 0; j < data.p(); ++j) {
        if (j > 0) out << ',';
        out << static_cast<int>(data.mask(i, j));
      }
      out << '\n';
    }
    write_text_file(mask_path, out.str());
  }
}

}  // namespace bmilasso
