#pragma once

// Numeric CSV round trips, dataset directories, and closed-loop trace export.
// All floating-point output uses %.17g so re-runs are byte-identical.

#include <string>

#include "ddmpc/mpc.hpp"
#include "ddmpc/plant.hpp"
#include "ddmpc/signals.hpp"

namespace ddmpc {

// Headerless numeric CSV; one row per line, comma-separated entries.
// Reading accepts comma or whitespace separators and skips blank lines and
// full-line # comments; ragged rows throw.
Mat read_csv_matrix(const std::string& path);
void write_csv_matrix(const std::string& path, const Mat& m);

// Inline matrix text: rows joined by ';', entries by single spaces.
std::string matrix_to_text(const Mat& m);
Mat matrix_from_text(const std::string& text);

// Dataset directory layout: nu.csv (N rows), state.csv (N+1 rows) or
// output.csv (N rows), disturbance.csv when the true record is present, and
// meta.txt carrying the declared noise bound, the collection gain, and the
// realized max |w| (diagnostic only; the declared bound is authoritative).
// CSV rows are samples, columns are vector components.
void save_dataset(const std::string& dir, const DataSet& data);
DataSet load_dataset(const std::string& dir);

// Trace CSV with header t,<signal>_1..,u_1..,J_star,feasible,margin_x,
// margin_u. J_star is blank off solve instants. signal_prefix picks the
// logged signal: "x" writes the state, "y" the measured output.
void write_trace_csv(const std::string& path, const ClosedLoopTrace& trace,
                     const std::string& signal_prefix);

}  // namespace ddmpc
