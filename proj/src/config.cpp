#include "ddmpc/config.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ddmpc/csv.hpp"
#include "ddmpc/errors.hpp"

namespace ddmpc {

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
  throw config_error(field + ": " + msg);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

double parse_double(const std::string& field, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    fail(field, "not a number: '" + value + "'");
  }
  if (used != value.size()) fail(field, "not a number: '" + value + "'");
  return v;
}

int parse_pos_int(const std::string& field, const std::string& value) {
  const double v = parse_double(field, value);
  const int i = static_cast<int>(v);
  if (v != i) fail(field, "not an integer: '" + value + "'");
  return i;
}

std::uint64_t parse_seed(const std::string& field, const std::string& value) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) fail(field, "not a seed: '" + value + "'");
    return v;
  } catch (const config_error&) {
    throw;
  } catch (const std::exception&) {
    fail(field, "not a seed: '" + value + "'");
  }
}

// "@path" loads a CSV relative to the config file; anything else is inline.
Mat parse_matrix(const std::string& field, const std::string& value,
                 const std::string& base_dir) {
  try {
    if (!value.empty() && value.front() == '@') {
      std::filesystem::path p(trim(value.substr(1)));
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      return read_csv_matrix(p.string());
    }
    return matrix_from_text(value);
  } catch (const io_error& e) {
    fail(field, e.what());
  }
}

Vec parse_vector(const std::string& field, const std::string& value,
                 const std::string& base_dir) {
  Mat m = parse_matrix(field, value, base_dir);
  if (m.rows() == 1) m = m.transpose().eval();
  if (m.cols() != 1) fail(field, "expected a vector, got a matrix");
  return Vec(m.col(0));
}

// Stable second-order single-output benchmark used by the output-feedback
// scenario: y_k = 0.25 y_{k-1} - 0.1 y_{k-2} + 0.2 u_{k-1} + 0.1 u_{k-2} + w_k.
DifferenceOperatorModel difference_operator_model() {
  DifferenceOperatorModel model;
  model.A = {Mat::Constant(1, 1, 0.1), Mat::Constant(1, 1, -0.25)};
  model.B = {Mat::Constant(1, 1, 0.1), Mat::Constant(1, 1, 0.2)};
  model.D = Mat::Zero(1, 1);
  return model;
}

}  // namespace

std::string to_string(PlantMode m) {
  return m == PlantMode::state ? "state" : "output";
}

int ExperimentConfig::n() const {
  if (mode == PlantMode::state) {
    if (!plant) fail("plant", "no plant configured");
    return plant->n();
  }
  if (!model) fail("plant", "no difference-operator model configured");
  return model->order();
}

int ExperimentConfig::m() const {
  if (mode == PlantMode::state) {
    if (!plant) fail("plant", "no plant configured");
    return plant->m();
  }
  if (!model) fail("plant", "no difference-operator model configured");
  return model->m();
}

int ExperimentConfig::p() const {
  if (mode == PlantMode::state) {
    if (!plant) fail("plant", "no plant configured");
    return plant->p();
  }
  if (!model) fail("plant", "no difference-operator model configured");
  return model->p();
}

int ExperimentConfig::effective_pe_order() const {
  if (pe_order > 0) return pe_order;
  return mode == PlantMode::state ? L + n() + 1 : L + 2 * n() + 1;
}

void ExperimentConfig::finalize() {
  const int nn = n(), mm = m(), pp = p();
  if (Q.size() == 0)
    Q = Mat::Identity(mode == PlantMode::state ? nn : pp,
                      mode == PlantMode::state ? nn : pp);
  if (R.size() == 0) R = Mat::Identity(mm, mm);
  if (gain.size() == 0) {
    const int cols = mode == PlantMode::state ? nn : nn * (mm + pp);
    gain = Mat::Zero(mm, cols);
  }
  if (pe_order == 0) pe_order = effective_pe_order();
  validate();
}

void ExperimentConfig::validate() const {
  if (mode == PlantMode::state) {
    if (!plant) fail("plant", "state mode needs an LTI plant");
    if (model) fail("plant", "state mode cannot take difference-operator coefficients");
    if (!plant->validate())
      fail("plant", "controllability or observability rank check failed");
  } else {
    if (!model) fail("plant", "output mode needs difference-operator coefficients");
    if (plant) fail("plant", "output mode cannot take state-space matrices");
    try {
      model->validate();
    } catch (const error& e) {
      fail("plant", e.what());
    }
  }
  const int nn = n(), mm = m(), pp = p();

  if (u_max <= 0) fail("bounds.u_max", "must be positive");
  if (x_max <= 0)
    fail(mode == PlantMode::state ? "bounds.x_max" : "bounds.y_max",
         "must be positive");
  if (w_max < 0) fail("bounds.w_max", "must be nonnegative");

  if (L < 1) fail("ocp.L", "must be at least 1");
  if (L < nn)
    fail("ocp.L", "must be at least the plant order " + std::to_string(nn));

  const int pe = effective_pe_order();
  if (pe < 1) fail("data.pe_order", "must be at least 1");
  const int n_min = (mm + 1) * (mode == PlantMode::state ? L + nn + 1
                                                         : L + 2 * nn + 1) -
                    1;
  if (N < n_min)
    fail("data.N", "must be at least " + std::to_string(n_min) +
                       " for this plant and horizon");
  if (mode == PlantMode::state && N_prime < N)
    fail("data.N_prime", "must be at least N = " + std::to_string(N));

  const int gain_cols = mode == PlantMode::state ? nn : nn * (mm + pp);
  if (gain.rows() != mm || gain.cols() != gain_cols)
    fail("gain.K", "expected " + std::to_string(mm) + "x" +
                       std::to_string(gain_cols) + ", got " +
                       std::to_string(gain.rows()) + "x" +
                       std::to_string(gain.cols()));

  const int q_dim = mode == PlantMode::state ? nn : pp;
  if (Q.rows() != q_dim || Q.cols() != q_dim)
    fail("ocp.Q", "expected " + std::to_string(q_dim) + "x" +
                      std::to_string(q_dim));
  if (R.rows() != mm || R.cols() != mm)
    fail("ocp.R", "expected " + std::to_string(mm) + "x" + std::to_string(mm));

  if (lambda_alpha <= 0) fail("ocp.lambda_alpha", "must be positive");
  if (lambda_sigma <= 0) fail("ocp.lambda_sigma", "must be positive");
  if (lambda_alpha_prime <= 0)
    fail("ocp.lambda_alpha_prime", "must be positive");
  if (lambda_sigma_prime <= 0)
    fail("ocp.lambda_sigma_prime", "must be positive");

  if (mode == PlantMode::state) {
    if (x0.size() != nn)
      fail("simulation.x0", "expected " + std::to_string(nn) + " entries");
  } else {
    if (hist_u.size() != nn * mm)
      fail("simulation.u_history",
           "expected " + std::to_string(nn * mm) + " entries");
    if (hist_y.size() != nn * pp)
      fail("simulation.y_history",
           "expected " + std::to_string(nn * pp) + " entries");
    if (warmup < 0) fail("simulation.warmup", "must be nonnegative");
    if (warmup < nn && gain.cwiseAbs().sum() > 0)
      fail("simulation.warmup",
           "must be at least the model order when the gain is nonzero");
  }
  if (t_sim < 1) fail("simulation.T_sim", "must be at least 1");
}

ExperimentConfig scenario_config(const std::string& name) {
  ExperimentConfig cfg;
  if (name == "two-mass-spring") {
    cfg.mode = PlantMode::state;
    cfg.plant_name = name;
    cfg.plant = two_mass_spring_plant();
    cfg.gain = two_mass_spring_gain();
    cfg.w_max = 1e-3;
    cfg.u_max = 10.0;
    cfg.x_max = 10.0;
    cfg.N = 50;
    cfg.N_prime = 5000;
    cfg.excitation_seed = 11;
    cfg.excitation_seed_long = 7;
    cfg.noise_seed = 42;
    cfg.L = 12;
    cfg.lambda_alpha = 100.0;
    cfg.lambda_sigma = 100.0;
    cfg.x0 = Vec(4);
    cfg.x0 << 4, -4, 0, 0;
    cfg.t_sim = 40;
    cfg.sim_seed = 1000;
  } else if (name == "difference-operator") {
    cfg.mode = PlantMode::output;
    cfg.plant_name = name;
    cfg.model = difference_operator_model();
    cfg.w_max = 1e-3;
    cfg.u_max = 5.0;
    cfg.x_max = 10.0;
    cfg.N = 80;
    cfg.excitation_seed = 3;
    cfg.noise_seed = 42;
    cfg.L = 10;
    cfg.lambda_alpha = 100.0;
    cfg.lambda_sigma = 100.0;
    cfg.hist_u = Vec::Zero(2);
    cfg.hist_y = Vec(2);
    cfg.hist_y << 0.05, -0.04;
    cfg.t_sim = 30;
    cfg.sim_seed = 7;
  } else {
    fail("scenario", "unknown scenario '" + name +
                         "' (built-ins: two-mass-spring, difference-operator)");
  }
  cfg.finalize();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw config_error("cannot open config file '" + path + "'");
  const std::string base_dir =
      std::filesystem::path(path).parent_path().string();

  ExperimentConfig cfg;
  std::map<std::string, std::string> plant_keys;
  std::vector<std::string> plant_order;
  std::string section;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    if (body.front() == '[') {
      const auto close = body.find(']');
      if (close == std::string::npos || trim(body.substr(close + 1)) != "")
        throw config_error(path + ":" + std::to_string(line_no) +
                           ": malformed section header");
      section = trim(body.substr(1, close - 1));
      static const char* known[] = {"experiment", "plant",      "gain",
                                    "bounds",     "data",       "ocp",
                                    "simulation"};
      bool ok = false;
      for (const char* k : known) ok = ok || section == k;
      if (!ok)
        throw config_error(path + ":" + std::to_string(line_no) +
                           ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw config_error(path + ":" + std::to_string(line_no) +
                         ": expected key = value");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (section.empty())
      throw config_error(path + ":" + std::to_string(line_no) +
                         ": key outside any section");
    const std::string field = section + "." + key;

    if (section == "experiment") {
      if (key == "mode") {
        if (value == "state")
          cfg.mode = PlantMode::state;
        else if (value == "output")
          cfg.mode = PlantMode::output;
        else
          fail(field, "must be state or output");
      } else if (key == "provenance") {
        try {
          cfg.provenance = provenance_from_string(value);
        } catch (const error& e) {
          fail(field, e.what());
        }
      } else {
        fail(field, "unknown key");
      }
    } else if (section == "plant") {
      if (plant_keys.count(key)) fail(field, "duplicate key");
      plant_keys[key] = value;
      plant_order.push_back(key);
    } else if (section == "gain") {
      if (key == "K") {
        if (value != "zero") cfg.gain = parse_matrix(field, value, base_dir);
      } else {
        fail(field, "unknown key");
      }
    } else if (section == "bounds") {
      if (key == "w_max")
        cfg.w_max = parse_double(field, value);
      else if (key == "u_max")
        cfg.u_max = parse_double(field, value);
      else if (key == "x_max" || key == "y_max")
        cfg.x_max = parse_double(field, value);
      else
        fail(field, "unknown key");
    } else if (section == "data") {
      if (key == "N")
        cfg.N = parse_pos_int(field, value);
      else if (key == "N_prime")
        cfg.N_prime = parse_pos_int(field, value);
      else if (key == "pe_order")
        cfg.pe_order = parse_pos_int(field, value);
      else if (key == "excitation_seed")
        cfg.excitation_seed = parse_seed(field, value);
      else if (key == "excitation_seed_long")
        cfg.excitation_seed_long = parse_seed(field, value);
      else if (key == "noise_seed")
        cfg.noise_seed = parse_seed(field, value);
      else
        fail(field, "unknown key");
    } else if (section == "ocp") {
      if (key == "L")
        cfg.L = parse_pos_int(field, value);
      else if (key == "Q") {
        if (value != "identity") cfg.Q = parse_matrix(field, value, base_dir);
      } else if (key == "R") {
        if (value != "identity") cfg.R = parse_matrix(field, value, base_dir);
      } else if (key == "lambda_alpha")
        cfg.lambda_alpha = parse_double(field, value);
      else if (key == "lambda_sigma")
        cfg.lambda_sigma = parse_double(field, value);
      else if (key == "lambda_alpha_prime")
        cfg.lambda_alpha_prime = parse_double(field, value);
      else if (key == "lambda_sigma_prime")
        cfg.lambda_sigma_prime = parse_double(field, value);
      else
        fail(field, "unknown key");
    } else if (section == "simulation") {
      if (key == "x0")
        cfg.x0 = parse_vector(field, value, base_dir);
      else if (key == "u_history")
        cfg.hist_u = parse_vector(field, value, base_dir);
      else if (key == "y_history")
        cfg.hist_y = parse_vector(field, value, base_dir);
      else if (key == "T_sim")
        cfg.t_sim = parse_pos_int(field, value);
      else if (key == "warmup")
        cfg.warmup = parse_pos_int(field, value);
      else if (key == "seed")
        cfg.sim_seed = parse_seed(field, value);
      else
        fail(field, "unknown key");
    }
  }

  // Assemble the plant once every key is in.
  if (plant_keys.count("name")) {
    if (plant_keys.size() > 1)
      fail("plant.name", "a built-in name excludes inline coefficients");
    const std::string& name = plant_keys["name"];
    if (name == "two-mass-spring") {
      if (cfg.mode != PlantMode::state)
        fail("plant.name", "two-mass-spring is a state-space plant");
      cfg.plant = two_mass_spring_plant();
    } else if (name == "difference-operator") {
      if (cfg.mode != PlantMode::output)
        fail("plant.name", "difference-operator is an output-feedback model");
      cfg.model = difference_operator_model();
    } else {
      fail("plant.name", "unknown built-in plant '" + name + "'");
    }
    cfg.plant_name = name;
  } else if (!plant_keys.empty()) {
    if (cfg.mode == PlantMode::state) {
      LtiPlant plant;
      for (const std::string& key : plant_order) {
        const std::string field = "plant." + key;
        if (key == "A")
          plant.A = parse_matrix(field, plant_keys[key], base_dir);
        else if (key == "B")
          plant.B = parse_matrix(field, plant_keys[key], base_dir);
        else if (key == "C")
          plant.C = parse_matrix(field, plant_keys[key], base_dir);
        else if (key == "D")
          plant.D = parse_matrix(field, plant_keys[key], base_dir);
        else
          fail(field, "unknown key for a state-space plant");
      }
      if (plant.A.size() == 0) fail("plant.A", "missing");
      if (plant.B.size() == 0) fail("plant.B", "missing");
      if (plant.C.size() == 0)
        plant.C = Mat::Identity(plant.A.rows(), plant.A.rows());
      if (plant.D.size() == 0) plant.D = Mat::Zero(plant.C.rows(), plant.B.cols());
      cfg.plant = plant;
    } else {
      if (!plant_keys.count("order")) fail("plant.order", "missing");
      const int order = parse_pos_int("plant.order", plant_keys["order"]);
      if (order < 1) fail("plant.order", "must be at least 1");
      DifferenceOperatorModel model;
      model.A.resize(order);
      model.B.resize(order);
      std::vector<bool> have_a(order, false), have_b(order, false);
      for (const std::string& key : plant_order) {
        const std::string field = "plant." + key;
        if (key == "order") continue;
        if (key == "D") {
          model.D = parse_matrix(field, plant_keys[key], base_dir);
          continue;
        }
        if (key.size() >= 2 && (key[0] == 'A' || key[0] == 'B')) {
          int idx = 0;
          try {
            idx = std::stoi(key.substr(1));
          } catch (const std::exception&) {
            fail(field, "unknown key for a difference-operator model");
          }
          if (idx < 1 || idx > order)
            fail(field, "lag index out of range 1.." + std::to_string(order));
          if (key[0] == 'A') {
            model.A[idx - 1] = parse_matrix(field, plant_keys[key], base_dir);
            have_a[idx - 1] = true;
          } else {
            model.B[idx - 1] = parse_matrix(field, plant_keys[key], base_dir);
            have_b[idx - 1] = true;
          }
        } else {
          fail(field, "unknown key for a difference-operator model");
        }
      }
      for (int i = 0; i < order; ++i) {
        if (!have_a[i]) fail("plant.A" + std::to_string(i + 1), "missing");
        if (!have_b[i]) fail("plant.B" + std::to_string(i + 1), "missing");
      }
      if (model.D.size() == 0)
        model.D = Mat::Zero(model.A[0].rows(), model.B[0].cols());
      cfg.model = model;
    }
  }

  cfg.finalize();
  return cfg;
}

}  // namespace ddmpc
