#include "mdflow/csv_io.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace mdflow {

namespace {

std::string fmt17(double v) {
  std::array<char, 40> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

std::string field_header(int dim, int components) {
  std::string h = "t,x1";
  if (dim == 2) h += ",x2";
  for (int c = 0; c < components; ++c) h += ",c" + std::to_string(c);
  return h;
}

std::vector<double> parse_row(const std::string& line, std::size_t expected, const std::string& path) {
  std::vector<double> out;
  out.reserve(expected);
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  if (out.size() != expected)
    throw std::runtime_error("bad column count in " + path + ": " + line);
  return out;
}

}  // namespace

void write_field_csv(const std::string& path, const Field& field) {
  const Grid& g = field.grid();
  auto out = open_out(path);
  out << field_header(g.dim(), field.components()) << "\n";
  std::array<double, 2> pos{};
  for (int k = 0; k < g.levels(); ++k) {
    for (int idx = 0; idx < g.interior_count(); ++idx) {
      g.node_position(idx, pos);
      out << fmt17(g.time_at(k));
      for (int ax = 0; ax < g.dim(); ++ax) out << ',' << fmt17(pos[static_cast<std::size_t>(ax)]);
      for (int c = 0; c < field.components(); ++c) out << ',' << fmt17(field.at(k, idx, c));
      out << "\n";
    }
  }
}

void write_scalar_field_csv(const std::string& path, const ScalarField& field) {
  const Grid& g = field.grid();
  Field tmp(g, 1);
  for (int k = 0; k < g.levels(); ++k)
    for (int idx = 0; idx < g.interior_count(); ++idx) tmp.at(k, idx) = field.interior(k, idx);
  write_field_csv(path, tmp);
}

Field read_field_csv(const std::string& path, const Grid& grid, int components) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty field csv: " + path);
  if (line != field_header(grid.dim(), components))
    throw std::runtime_error("unexpected header in " + path + ": " + line);
  Field field(grid, components);
  const std::size_t cols = static_cast<std::size_t>(1 + grid.dim() + components);
  for (int k = 0; k < grid.levels(); ++k) {
    for (int idx = 0; idx < grid.interior_count(); ++idx) {
      if (!std::getline(in, line)) throw std::runtime_error("truncated field csv: " + path);
      const auto row = parse_row(line, cols, path);
      for (int c = 0; c < components; ++c)
        field.at(k, idx, c) = row[static_cast<std::size_t>(1 + grid.dim() + c)];
    }
  }
  if (std::getline(in, line) && !line.empty())
    throw std::runtime_error("trailing rows in field csv: " + path);
  return field;
}

void write_trace_csv(const std::string& path, const FlowTrace& trace) {
  auto out = open_out(path);
  out << "s,sup_gap,probe_gap,lyapunov_probe,grad_sup,eta,mono_violation\n";
  for (const auto& r : trace.records) {
    out << fmt17(r.s) << ',' << fmt17(r.sup_gap) << ',' << fmt17(r.probe_gap) << ','
        << fmt17(r.lyapunov_probe) << ',' << fmt17(r.grad_sup) << ',' << fmt17(r.eta) << ','
        << fmt17(r.mono_violation) << "\n";
  }
}

FlowTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty trace csv: " + path);
  if (line != "s,sup_gap,probe_gap,lyapunov_probe,grad_sup,eta,mono_violation")
    throw std::runtime_error("unexpected trace header: " + line);
  FlowTrace trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto row = parse_row(line, 7, path);
    trace.records.push_back({row[0], row[1], row[2], row[3], row[4], row[5], row[6]});
  }
  return trace;
}

}  // namespace mdflow
