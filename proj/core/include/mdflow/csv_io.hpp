#pragma once

#include <string>

#include "mdflow/field.hpp"
#include "mdflow/flow_trace.hpp"

namespace mdflow {

/// Field dump format: header `t,x1[,x2],c0[,c1,...]`, one row per interior
/// node per time level, full double precision (17 significant digits).
void write_field_csv(const std::string& path, const Field& field);
void write_scalar_field_csv(const std::string& path, const ScalarField& field);

/// Reads a field written by write_field_csv back onto the same grid.
/// Throws std::runtime_error on shape or header mismatch.
Field read_field_csv(const std::string& path, const Grid& grid, int components);

/// Trace format: header `s,sup_gap,probe_gap,lyapunov_probe,grad_sup,eta,mono_violation`.
void write_trace_csv(const std::string& path, const FlowTrace& trace);
FlowTrace read_trace_csv(const std::string& path);

}  // namespace mdflow
