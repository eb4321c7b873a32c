#include "ddmpc/csv.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ddmpc/errors.hpp"

namespace ddmpc {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<double> parse_row(const std::string& line, const std::string& ctx) {
  std::string cleaned = line;
  for (char& c : cleaned)
    if (c == ',') c = ' ';
  std::istringstream is(cleaned);
  std::vector<double> row;
  std::string tok;
  while (is >> tok) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      throw io_error(ctx + ": not a number: '" + tok + "'");
    }
    if (used != tok.size())
      throw io_error(ctx + ": not a number: '" + tok + "'");
    row.push_back(v);
  }
  return row;
}

Mat rows_to_matrix(const std::vector<std::vector<double>>& rows,
                   const std::string& ctx) {
  if (rows.empty()) throw io_error(ctx + ": no data rows");
  const std::size_t cols = rows.front().size();
  Mat m(static_cast<int>(rows.size()), static_cast<int>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols)
      throw io_error(ctx + ": ragged row " + std::to_string(i) + " (" +
                     std::to_string(rows[i].size()) + " entries, expected " +
                     std::to_string(cols) + ")");
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  }
  return m;
}

// Samples are stored as matrix columns; CSV rows are samples.
void write_sequence_csv(const std::string& path, const VecSequence& z) {
  write_csv_matrix(path, z.data().transpose());
}

VecSequence read_sequence_csv(const std::string& path) {
  return VecSequence(read_csv_matrix(path).transpose());
}

}  // namespace

Mat read_csv_matrix(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open CSV file '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    rows.push_back(parse_row(line, path));
  }
  return rows_to_matrix(rows, path);
}

void write_csv_matrix(const std::string& path, const Mat& m) {
  std::ofstream os(path);
  if (!os) throw io_error("cannot open '" + path + "' for writing");
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << fmt(m(i, j));
    }
    os << '\n';
  }
  if (!os) throw io_error("failed writing '" + path + "'");
}

std::string matrix_to_text(const Mat& m) {
  std::string out;
  for (int i = 0; i < m.rows(); ++i) {
    if (i) out += "; ";
    for (int j = 0; j < m.cols(); ++j) {
      if (j) out += ' ';
      out += fmt(m(i, j));
    }
  }
  return out;
}

Mat matrix_from_text(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find(';', start);
    const std::string piece =
        text.substr(start, end == std::string::npos ? end : end - start);
    const std::vector<double> row = parse_row(piece, "inline matrix");
    if (!row.empty()) rows.push_back(row);
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return rows_to_matrix(rows, "inline matrix");
}

void save_dataset(const std::string& dir, const DataSet& data) {
  data.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw io_error("cannot create dataset directory '" + dir + "'");
  write_sequence_csv(dir + "/nu.csv", data.nu);
  if (data.state) write_sequence_csv(dir + "/state.csv", *data.state);
  if (data.output) write_sequence_csv(dir + "/output.csv", *data.output);
  double realized = 0.0;
  if (data.disturbance) {
    write_sequence_csv(dir + "/disturbance.csv", *data.disturbance);
    realized = data.disturbance->data().cwiseAbs().maxCoeff();
  }
  std::ofstream os(dir + "/meta.txt");
  if (!os) throw io_error("cannot open '" + dir + "/meta.txt' for writing");
  os << "[dataset]\n";
  os << "mode = " << (data.state ? "state" : "output") << "\n";
  os << "w_max = " << fmt(data.w_max) << "\n";
  if (data.disturbance) os << "realized_w_max = " << fmt(realized) << "\n";
  os << "\n[gain]\n";
  os << "K = " << matrix_to_text(data.gain) << "\n";
  if (!os) throw io_error("failed writing '" + dir + "/meta.txt'");
}

DataSet load_dataset(const std::string& dir) {
  const std::string meta_path = dir + "/meta.txt";
  std::ifstream is(meta_path);
  if (!is)
    throw io_error("dataset not found: cannot open '" + meta_path + "'");
  std::string line, mode, gain_text;
  double w_max = 0.0;
  bool have_mode = false, have_wmax = false, have_gain = false;
  while (std::getline(is, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#' ||
        line[first] == '[')
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw io_error(meta_path + ": malformed line: " + line);
    auto trim = [](std::string t) {
      const auto b = t.find_first_not_of(" \t\r");
      const auto e = t.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : t.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "mode") {
      mode = value;
      have_mode = true;
    } else if (key == "w_max") {
      w_max = std::stod(value);
      have_wmax = true;
    } else if (key == "realized_w_max") {
      // diagnostic only
    } else if (key == "K") {
      gain_text = value;
      have_gain = true;
    } else {
      throw io_error(meta_path + ": unknown key '" + key + "'");
    }
  }
  if (!have_mode || !have_wmax || !have_gain)
    throw io_error(meta_path + ": missing mode, w_max, or K");
  if (mode != "state" && mode != "output")
    throw io_error(meta_path + ": mode must be state or output");

  DataSet data{read_sequence_csv(dir + "/nu.csv"),
               std::nullopt,
               std::nullopt,
               matrix_from_text(gain_text),
               std::nullopt,
               w_max};
  if (mode == "state")
    data.state = read_sequence_csv(dir + "/state.csv");
  else
    data.output = read_sequence_csv(dir + "/output.csv");
  if (std::filesystem::exists(dir + "/disturbance.csv"))
    data.disturbance = read_sequence_csv(dir + "/disturbance.csv");
  data.validate();
  return data;
}

void write_trace_csv(const std::string& path, const ClosedLoopTrace& trace,
                     const std::string& signal_prefix) {
  if (trace.steps.empty()) throw io_error("trace is empty");
  std::ofstream os(path);
  if (!os) throw io_error("cannot open '" + path + "' for writing");
  const bool use_output = signal_prefix == "y";
  const TraceStep& first = trace.steps.front();
  const int sd = static_cast<int>((use_output ? first.y : first.x).size());
  const int md = static_cast<int>(first.u.size());
  os << "t";
  for (int i = 1; i <= sd; ++i) os << ',' << signal_prefix << '_' << i;
  for (int i = 1; i <= md; ++i) os << ",u_" << i;
  os << ",J_star,feasible,margin_x,margin_u\n";
  for (const TraceStep& s : trace.steps) {
    os << s.t;
    const Vec& sig = use_output ? s.y : s.x;
    for (int i = 0; i < sd; ++i) os << ',' << fmt(sig(i));
    for (int i = 0; i < md; ++i) os << ',' << fmt(s.u(i));
    os << ',';
    if (s.solve_instant) os << fmt(s.j_star);
    os << ',' << (s.feasible ? 1 : 0) << ',' << fmt(s.margin_x) << ','
       << fmt(s.margin_u) << '\n';
  }
  if (!os) throw io_error("failed writing '" + path + "'");
}

}  // namespace ddmpc
