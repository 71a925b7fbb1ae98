#include "gendyn/matrix_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace gendyn::io {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_text_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp + " for writing");
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
  std::ostringstream out;
  out << "# rows=" << m.rows() << " cols=" << m.cols() << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << fmt(m(i, j));
    }
    out << '\n';
  }
  write_text_atomic(path, out.str());
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string header;
  std::getline(in, header);
  Eigen::Index rows = 0, cols = 0;
  if (std::sscanf(header.c_str(), "# rows=%ld cols=%ld", &rows, &cols) != 2 ||
      rows < 1 || cols < 1)
    throw IoError(path + ": expected header '# rows=<r> cols=<c>'");
  Eigen::MatrixXd m(rows, cols);
  std::string line;
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!std::getline(in, line)) throw IoError(path + ": truncated matrix body");
    std::stringstream ss(line);
    std::string cell;
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!std::getline(ss, cell, ',')) throw IoError(path + ": short row");
      m(i, j) = std::stod(cell);
    }
  }
  return m;
}

void Table::add(const std::string& name, std::vector<double> values) {
  if (!data.empty() && values.size() != data.front().size())
    throw IoError("Table: column " + name + " length mismatch");
  columns.push_back(name);
  data.push_back(std::move(values));
}

void write_table_csv(const std::string& path, const Table& table) {
  std::ostringstream out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) out << ',';
    out << table.columns[c];
  }
  out << '\n';
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < table.data.size(); ++c) {
      if (c) out << ',';
      out << fmt(table.data[c][r]);
    }
    out << '\n';
  }
  write_text_atomic(path, out.str());
}

void write_trace_csv(const std::string& path, const sim::ErrorTrace& trace) {
  Table t;
  t.add("t_over_tau", trace.times);
  t.add("eps_train", trace.train_errors);
  t.add("eps_test", trace.test_errors);
  const int k = static_cast<int>(trace.mode_values.cols());
  auto col = [&](const Eigen::MatrixXd& m, int j) {
    std::vector<double> v(m.rows());
    for (Eigen::Index i = 0; i < m.rows(); ++i) v[i] = m(i, j);
    return v;
  };
  for (int j = 0; j < k; ++j) t.add("s_" + std::to_string(j + 1), col(trace.mode_values, j));
  for (int j = 0; j < k; ++j) t.add("align_u_" + std::to_string(j + 1), col(trace.align_u, j));
  for (int j = 0; j < k; ++j) t.add("align_v_" + std::to_string(j + 1), col(trace.align_v, j));
  write_table_csv(path, t);
}

}  // namespace gendyn::io
