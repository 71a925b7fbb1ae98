#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gendyn/simulator.hpp"

namespace gendyn::io {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dense matrix CSV: first line `# rows=<r> cols=<c>`, then row-major comma
/// separated values. Values are written with 17 significant digits so a
/// round trip is bit exact.
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::string& path);

/// Column-oriented CSV with a header line; all columns must share a length.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;

  void add(const std::string& name, std::vector<double> values);
  std::size_t rows() const { return data.empty() ? 0 : data.front().size(); }
};

void write_table_csv(const std::string& path, const Table& table);

/// ErrorTrace CSV with columns
/// t_over_tau, eps_train, eps_test, s_1..s_k, align_u_1..k, align_v_1..k.
void write_trace_csv(const std::string& path, const sim::ErrorTrace& trace);

/// Atomic text write (temp file + rename).
void write_text_atomic(const std::string& path, const std::string& text);

}  // namespace gendyn::io
