#include "json_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace statsel::detail {

namespace {

template <class T>
std::vector<T> per_user(const json& j, const char* key, std::size_t k) {
  const auto& v = j.at(key);
  if (v.is_array()) {
    auto out = v.get<std::vector<T>>();
    if (out.size() != k) {
      throw InvariantError(std::string("config: '") + key + "' must have K entries");
    }
    return out;
  }
  return std::vector<T>(k, v.get<T>());
}

std::vector<double> map_values(std::vector<double> v, double (*f)(double)) {
  std::transform(v.begin(), v.end(), v.begin(), f);
  return v;
}

void require_shape(const json& j, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (!j.at("data").is_array() || j.at("data").size() != static_cast<std::size_t>(rows * cols)) {
    throw IoError(std::string(what) + ": data length does not match shape");
  }
}

}  // namespace

json complex_matrix_to_json(const CMatrix& m) {
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back({m(r, c).real(), m(r, c).imag()});
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

CMatrix complex_matrix_from_json(const json& j, const char* what) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  require_shape(j, rows, cols, what);
  CMatrix m(rows, cols);
  const auto& data = j.at("data");
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& e = data[static_cast<std::size_t>(r * cols + c)];
      m(r, c) = cdouble(e.at(0).get<double>(), e.at(1).get<double>());
    }
  }
  return m;
}

json real_matrix_to_json(const RMatrix& m) {
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

RMatrix real_matrix_from_json(const json& j, const char* what) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  require_shape(j, rows, cols, what);
  RMatrix m(rows, cols);
  const auto& data = j.at("data");
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)].get<double>();
  }
  return m;
}

json config_to_json(const SystemConfig& c) {
  const auto& s = c.controls;
  return {{"N", c.num_antennas},
          {"L", c.num_rf_chains},
          {"K", c.num_users()},
          {"N_k", c.user_antennas},
          {"noise_power", c.noise_power},
          {"power_budgets", c.power_budgets},
          {"path_gains", c.path_gains},
          {"rng_seed", c.rng_seed},
          {"fp_tol", s.fp_tol},
          {"fp_max_iter", s.fp_max_iter},
          {"ao_tol", s.ao_tol},
          {"ao_max_iter", s.ao_max_iter},
          {"mm_tol", s.mm_tol},
          {"mm_max_iter", s.mm_max_iter}};
}

SystemConfig config_from_json(const json& j) {
  if (!j.is_object()) throw IoError("config: expected an object");
  SystemConfig c;
  try {
    c.num_antennas = j.at("N").get<int>();
    c.num_rf_chains = j.at("L").get<int>();
    const int k = j.at("K").get<int>();
    if (k < 1) throw InvariantError("config: K must be positive");
    const auto uk = static_cast<std::size_t>(k);
    c.user_antennas = per_user<int>(j, "N_k", uk);

    if (j.contains("noise_power")) {
      c.noise_power = j.at("noise_power").get<double>();
    } else {
      c.noise_power = dbm_to_watts(j.at("noise_power_dbm").get<double>());
    }
    if (j.contains("power_budgets")) {
      c.power_budgets = per_user<double>(j, "power_budgets", uk);
    } else {
      c.power_budgets = map_values(per_user<double>(j, "power_budgets_dbm", uk), dbm_to_watts);
    }
    if (j.contains("path_gains")) {
      c.path_gains = per_user<double>(j, "path_gains", uk);
    } else {
      c.path_gains = map_values(per_user<double>(j, "path_gains_db", uk), db_to_linear);
    }
    c.rng_seed = j.value("rng_seed", std::uint64_t{0});
    auto& s = c.controls;
    s.fp_tol = j.value("fp_tol", s.fp_tol);
    s.fp_max_iter = j.value("fp_max_iter", s.fp_max_iter);
    s.ao_tol = j.value("ao_tol", s.ao_tol);
    s.ao_max_iter = j.value("ao_max_iter", s.ao_max_iter);
    s.mm_tol = j.value("mm_tol", s.mm_tol);
    s.mm_max_iter = j.value("mm_max_iter", s.mm_max_iter);
  } catch (const json::out_of_range& e) {
    throw IoError(std::string("config: missing key: ") + e.what());
  } catch (const json::type_error& e) {
    throw IoError(std::string("config: wrong value type: ") + e.what());
  }
  c.validate();
  return c;
}

json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw IoError(source + ":" + std::to_string(line) + ": parse error: " + e.what());
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_json_text(buf.str(), path.string());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace statsel::detail
