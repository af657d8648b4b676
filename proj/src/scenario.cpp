#include "udkf/scenario.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "udkf/rng.hpp"

namespace udkf {

namespace {

struct RawValue {
  std::size_t line = 0;
  std::vector<double> scalars;           // for "key = v0 v1 ..." lines
  std::optional<Matrix> matrix;          // for "key = [" blocks
  std::string text;                      // raw value text for string keys
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& s) {
  const auto pos = s.find('#');
  return pos == std::string::npos ? s : s.substr(0, pos);
}

[[noreturn]] void fail(const std::string& origin, std::size_t line, const std::string& msg) {
  throw ScenarioError(origin + ":" + std::to_string(line) + ": " + msg);
}

[[noreturn]] void fail_field(const std::string& origin, const std::string& field,
                             const std::string& msg) {
  throw ScenarioError(origin + ": field '" + field + "': " + msg);
}

std::vector<double> parse_numbers(const std::string& origin, std::size_t line,
                                  const std::string& text) {
  std::vector<double> out;
  std::istringstream is(text);
  std::string tok;
  while (is >> tok) {
    try {
      std::size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      if (!std::isfinite(v)) fail(origin, line, "non-finite number '" + tok + "'");
      out.push_back(v);
    } catch (const std::logic_error&) {
      fail(origin, line, "expected a number, got '" + tok + "'");
    }
  }
  return out;
}

class RawScenario {
 public:
  RawScenario(const std::string& text, std::string origin) : origin_(std::move(origin)) {
    std::istringstream is(text);
    std::string raw;
    std::size_t lineno = 0;
    std::optional<std::string> block_key;
    std::size_t block_line = 0;
    std::vector<std::vector<double>> block_rows;

    while (std::getline(is, raw)) {
      ++lineno;
      const std::string line = trim(strip_comment(raw));
      if (line.empty()) continue;

      if (block_key) {
        if (line == "]") {
          if (block_rows.empty()) fail(origin_, lineno, "matrix block '" + *block_key + "' is empty");
          const std::size_t cols = block_rows.front().size();
          std::vector<double> data;
          for (std::size_t r = 0; r < block_rows.size(); ++r) {
            if (block_rows[r].size() != cols) {
              fail(origin_, block_line, "matrix block '" + *block_key + "' has ragged rows");
            }
            data.insert(data.end(), block_rows[r].begin(), block_rows[r].end());
          }
          RawValue v;
          v.line = block_line;
          v.matrix = Matrix::from_data(block_rows.size(), cols, std::move(data));
          store(*block_key, std::move(v), block_line);
          block_key.reset();
          block_rows.clear();
        } else {
          block_rows.push_back(parse_numbers(origin_, lineno, line));
        }
        continue;
      }

      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        fail(origin_, lineno, "expected 'key = value', got '" + line + "'");
      }
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) fail(origin_, lineno, "empty key");
      if (value == "[") {
        block_key = key;
        block_line = lineno;
        continue;
      }
      RawValue v;
      v.line = lineno;
      v.text = value;
      store(key, std::move(v), lineno);
    }
    if (block_key) {
      fail(origin_, block_line, "matrix block '" + *block_key + "' is not closed with ']'");
    }
  }

  const std::string& origin() const { return origin_; }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::set<std::string> keys() const {
    std::set<std::string> out;
    for (const auto& [k, v] : values_) out.insert(k);
    return out;
  }

  std::string get_string(const std::string& key) const {
    const RawValue& v = at(key);
    if (v.matrix) fail(origin_, v.line, "field '" + key + "' must be a plain value, not a matrix");
    return v.text;
  }

  double get_scalar(const std::string& key) const {
    const RawValue& v = at(key);
    if (v.matrix) fail(origin_, v.line, "field '" + key + "' must be a scalar");
    const auto nums = parse_numbers(origin_, v.line, v.text);
    if (nums.size() != 1) fail(origin_, v.line, "field '" + key + "' must be a single number");
    return nums[0];
  }

  std::vector<double> get_vector(const std::string& key) const {
    const RawValue& v = at(key);
    if (v.matrix) fail(origin_, v.line, "field '" + key + "' must be a vector on one line");
    auto nums = parse_numbers(origin_, v.line, v.text);
    if (nums.empty()) fail(origin_, v.line, "field '" + key + "' is empty");
    return nums;
  }

  Matrix get_matrix(const std::string& key) const {
    const RawValue& v = at(key);
    if (v.matrix) return *v.matrix;
    // Allow 1x1 matrices written as plain scalars.
    const auto nums = parse_numbers(origin_, v.line, v.text);
    if (nums.size() != 1) {
      fail(origin_, v.line, "field '" + key + "' must be a matrix block '[' ... ']' or a scalar");
    }
    return Matrix::from_data(1, 1, {nums[0]});
  }

  std::size_t line_of(const std::string& key) const { return at(key).line; }

 private:
  const RawValue& at(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
      throw ScenarioError(origin_ + ": missing required field '" + key + "'");
    }
    return it->second;
  }

  void store(const std::string& key, RawValue v, std::size_t line) {
    if (values_.count(key)) fail(origin_, line, "duplicate field '" + key + "'");
    values_.emplace(key, std::move(v));
  }

  std::string origin_;
  std::map<std::string, RawValue> values_;
};

const std::set<std::string> kKnownKeys = {
    "version", "model", "steps", "seed", "mode", "relinearize",
    "n", "q", "m", "dt", "sigma_accel", "sigma_meas", "sigma_range", "sigma_bearing",
    "x0", "truth_x0", "out", "P0", "F", "G", "Q", "H", "R"};

std::size_t get_count(const RawScenario& raw, const std::string& key) {
  const double v = raw.get_scalar(key);
  if (v < 0 || v != std::floor(v) || v > 1e9) {
    fail_field(raw.origin(), key, "must be a nonnegative integer");
  }
  return static_cast<std::size_t>(v);
}

void check_matrix_dim(const std::string& origin, const std::string& field, const Matrix& m,
                      std::size_t rows, std::size_t cols) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ScenarioError(origin + ": " + field + " dimension mismatch: got " + m.shape_str() +
                        ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

}  // namespace

ScenarioConfig parse_scenario_text(const std::string& text, const std::string& origin) {
  RawScenario raw(text, origin);

  for (const auto& key : raw.keys()) {
    if (!kKnownKeys.count(key)) {
      fail(origin, raw.line_of(key), "unknown field '" + key + "'");
    }
  }

  ScenarioConfig cfg;
  const double version = raw.get_scalar("version");
  if (version != kScenarioVersion) {
    fail_field(origin, "version", "unsupported version " + std::to_string(version) +
                                      " (expected " + std::to_string(kScenarioVersion) + ")");
  }
  cfg.model = raw.get_string("model");
  cfg.steps = get_count(raw, "steps");
  const double seed = raw.get_scalar("seed");  // mandatory: reproducibility
  if (seed < 0 || seed != std::floor(seed)) fail_field(origin, "seed", "must be a nonnegative integer");
  cfg.seed = static_cast<std::uint64_t>(seed);

  if (raw.has("mode")) {
    const std::string mode = raw.get_string("mode");
    if (mode == "ud") cfg.mode = FilterMode::kUd;
    else if (mode == "dense") cfg.mode = FilterMode::kDense;
    else if (mode == "both") cfg.mode = FilterMode::kBoth;
    else fail_field(origin, "mode", "must be one of ud | dense | both, got '" + mode + "'");
  }
  if (raw.has("relinearize")) {
    const std::string v = raw.get_string("relinearize");
    if (v == "true") cfg.relinearize = true;
    else if (v == "false") cfg.relinearize = false;
    else fail_field(origin, "relinearize", "must be true or false, got '" + v + "'");
  }
  if (raw.has("out")) cfg.out_dir = raw.get_string("out");
  if (raw.has("dt")) cfg.dt = raw.get_scalar("dt");
  if (raw.has("sigma_accel")) cfg.sigma_accel = raw.get_scalar("sigma_accel");
  if (raw.has("sigma_meas")) cfg.sigma_meas = raw.get_scalar("sigma_meas");
  if (raw.has("sigma_range")) cfg.sigma_range = raw.get_scalar("sigma_range");
  if (raw.has("sigma_bearing")) cfg.sigma_bearing = raw.get_scalar("sigma_bearing");
  if (cfg.dt <= 0.0) fail_field(origin, "dt", "must be positive");

  // Model dimensions.
  if (cfg.model == "scalar") {
    cfg.n = 1; cfg.q = 1; cfg.m = 1;
  } else if (cfg.model == "constant-velocity") {
    cfg.n = 2; cfg.q = 1; cfg.m = 1;
  } else if (cfg.model == "range-bearing") {
    cfg.n = 4; cfg.q = 2; cfg.m = 2;
  } else if (cfg.model == "custom-linear") {
    cfg.n = get_count(raw, "n");
    cfg.q = get_count(raw, "q");
    cfg.m = get_count(raw, "m");
    if (cfg.n == 0) fail_field(origin, "n", "must be >= 1");
    if (cfg.m == 0) fail_field(origin, "m", "must be >= 1");
  } else {
    fail_field(origin, "model",
               "unknown model '" + cfg.model +
                   "' (expected scalar | constant-velocity | range-bearing | custom-linear)");
  }
  // Explicit dims, when present, must agree with the model.
  for (const auto& [key, expected] :
       {std::pair<std::string, std::size_t>{"n", cfg.n}, {"q", cfg.q}, {"m", cfg.m}}) {
    if (cfg.model != "custom-linear" && raw.has(key) && get_count(raw, key) != expected) {
      fail_field(origin, key, "model '" + cfg.model + "' fixes " + key + " = " +
                                  std::to_string(expected));
    }
  }

  // Matrix fields. Built-in models derive F/G/H from parameters.
  const bool custom = cfg.model == "custom-linear";
  for (const std::string key : {"F", "G", "H"}) {
    if (!custom && raw.has(key)) {
      fail_field(origin, key, "not applicable to model '" + cfg.model + "' (derived internally)");
    }
  }
  if (custom) {
    cfg.f = raw.get_matrix("F");
    check_matrix_dim(origin, "F", *cfg.f, cfg.n, cfg.n);
    cfg.h = raw.get_matrix("H");
    check_matrix_dim(origin, "H", *cfg.h, cfg.m, cfg.n);
    if (cfg.q > 0) {
      cfg.g = raw.get_matrix("G");
      check_matrix_dim(origin, "G", *cfg.g, cfg.n, cfg.q);
      cfg.q_cov = raw.get_matrix("Q");
      check_matrix_dim(origin, "Q", *cfg.q_cov, cfg.q, cfg.q);
    } else if (raw.has("G") || raw.has("Q")) {
      fail_field(origin, "G", "q = 0 scenarios take no G/Q");
    }
    cfg.r = raw.get_matrix("R");
    check_matrix_dim(origin, "R", *cfg.r, cfg.m, cfg.m);
    cfg.x0 = raw.get_vector("x0");
    if (cfg.x0.size() != cfg.n) {
      fail_field(origin, "x0", "length " + std::to_string(cfg.x0.size()) + ", expected " +
                                   std::to_string(cfg.n));
    }
    cfg.p0 = raw.get_matrix("P0");
    check_matrix_dim(origin, "P0", *cfg.p0, cfg.n, cfg.n);
  } else {
    // Optional overrides for built-ins.
    if (raw.has("Q")) {
      cfg.q_cov = raw.get_matrix("Q");
      check_matrix_dim(origin, "Q", *cfg.q_cov, cfg.q, cfg.q);
    }
    if (raw.has("R")) {
      cfg.r = raw.get_matrix("R");
      check_matrix_dim(origin, "R", *cfg.r, cfg.m, cfg.m);
    }
    if (raw.has("x0")) {
      cfg.x0 = raw.get_vector("x0");
      if (cfg.x0.size() != cfg.n) {
        fail_field(origin, "x0", "length " + std::to_string(cfg.x0.size()) + ", expected " +
                                     std::to_string(cfg.n));
      }
    }
    if (raw.has("P0")) {
      cfg.p0 = raw.get_matrix("P0");
      check_matrix_dim(origin, "P0", *cfg.p0, cfg.n, cfg.n);
    }
  }
  if (raw.has("truth_x0")) {
    cfg.truth_x0 = raw.get_vector("truth_x0");
    if (cfg.truth_x0->size() != cfg.n) {
      fail_field(origin, "truth_x0", "length " + std::to_string(cfg.truth_x0->size()) +
                                         ", expected " + std::to_string(cfg.n));
    }
  }
  return cfg;
}

ScenarioConfig parse_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ScenarioError(path + ": cannot open scenario file");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str(), path);
}

namespace {

ProcessModel linear_process(const Matrix& f, std::optional<Matrix> g, std::optional<Matrix> q) {
  ProcessModel p;
  p.propagate_state = [f](const std::vector<double>& x, const std::vector<double>&) {
    return mat_vec(f, x);
  };
  p.jacobian_f = [f](const std::vector<double>&, const std::vector<double>&) { return f; };
  if (g) {
    const Matrix gm = *g;
    p.jacobian_g = [gm](const std::vector<double>&, const std::vector<double>&) { return gm; };
    p.q_cov = q;
  }
  return p;
}

MeasurementModelSet linear_measurement(const Matrix& h, const Matrix& r) {
  MeasurementModelSet m;
  m.predict = [h](const std::vector<double>& x) { return mat_vec(h, x); };
  m.jacobian_h = [h](const std::vector<double>&) { return h; };
  m.r_cov = r;
  return m;
}

}  // namespace

ScenarioSystem build_system(const ScenarioConfig& cfg) {
  ScenarioSystem sys;

  if (cfg.model == "scalar" || cfg.model == "custom-linear" || cfg.model == "constant-velocity") {
    Matrix f(1, 1), h(1, 1), r(1, 1);
    std::optional<Matrix> g, q;
    std::vector<double> x0;
    Matrix p0(1, 1);
    if (cfg.model == "scalar") {
      f = Matrix::identity(1);
      g = Matrix::identity(1);
      q = cfg.q_cov.value_or(Matrix::from_rows({{0.01}}));
      h = Matrix::identity(1);
      r = cfg.r.value_or(Matrix::from_rows({{cfg.sigma_meas * cfg.sigma_meas}}));
      x0 = cfg.x0.empty() ? std::vector<double>{0.0} : cfg.x0;
      p0 = cfg.p0.value_or(Matrix::identity(1));
    } else if (cfg.model == "constant-velocity") {
      const double dt = cfg.dt;
      f = Matrix::from_rows({{1.0, dt}, {0.0, 1.0}});
      g = Matrix::from_rows({{0.5 * dt * dt}, {dt}});
      q = cfg.q_cov.value_or(Matrix::from_rows({{cfg.sigma_accel * cfg.sigma_accel}}));
      h = Matrix::from_rows({{1.0, 0.0}});
      r = cfg.r.value_or(Matrix::from_rows({{cfg.sigma_meas * cfg.sigma_meas}}));
      x0 = cfg.x0.empty() ? std::vector<double>{0.0, 0.0} : cfg.x0;
      p0 = cfg.p0.value_or(Matrix::diagonal({10.0, 10.0}));
    } else {
      f = *cfg.f;
      h = *cfg.h;
      r = *cfg.r;
      g = cfg.g;
      q = cfg.q_cov;
      x0 = cfg.x0;
      p0 = *cfg.p0;
    }
    sys.process = linear_process(f, g, q);
    sys.meas = linear_measurement(h, r);
    sys.x0 = x0;
    sys.p0 = p0;
  } else if (cfg.model == "range-bearing") {
    // Planar constant-velocity target, range and bearing from a sensor
    // at the origin. Geometry keeps the bearing away from the +-pi cut.
    const double dt = cfg.dt;
    const Matrix f = Matrix::from_rows(
        {{1.0, 0.0, dt, 0.0}, {0.0, 1.0, 0.0, dt}, {0.0, 0.0, 1.0, 0.0}, {0.0, 0.0, 0.0, 1.0}});
    const Matrix g = Matrix::from_rows(
        {{0.5 * dt * dt, 0.0}, {0.0, 0.5 * dt * dt}, {dt, 0.0}, {0.0, dt}});
    const double sa2 = cfg.sigma_accel * cfg.sigma_accel;
    const Matrix q = cfg.q_cov.value_or(Matrix::diagonal({sa2, sa2}));
    const Matrix r = cfg.r.value_or(Matrix::diagonal(
        {cfg.sigma_range * cfg.sigma_range, cfg.sigma_bearing * cfg.sigma_bearing}));

    sys.process = linear_process(f, g, q);
    sys.meas.predict = [](const std::vector<double>& x) {
      const double rho = std::hypot(x[0], x[1]);
      return std::vector<double>{rho, std::atan2(x[1], x[0])};
    };
    sys.meas.jacobian_h = [](const std::vector<double>& x) {
      const double rho2 = x[0] * x[0] + x[1] * x[1];
      const double rho = std::sqrt(rho2);
      return Matrix::from_rows({{x[0] / rho, x[1] / rho, 0.0, 0.0},
                                {-x[1] / rho2, x[0] / rho2, 0.0, 0.0}});
    };
    sys.meas.r_cov = r;
    sys.x0 = cfg.x0.empty() ? std::vector<double>{100.0, 10.0, -0.8, 0.4} : cfg.x0;
    sys.p0 = cfg.p0.value_or(Matrix::diagonal({25.0, 25.0, 1.0, 1.0}));
  } else {
    throw ScenarioError("build_system: unknown model '" + cfg.model + "'");
  }

  sys.truth_x0 = cfg.truth_x0.value_or(sys.x0);
  return sys;
}

std::vector<EpochInput> simulate_inputs(const ScenarioConfig& cfg, const ScenarioSystem& sys) {
  PortableRng rng(cfg.seed);
  const std::size_t q = sys.process.q_cov ? sys.process.q_cov->rows() : 0;
  const std::size_t m = sys.meas.r_cov.rows();

  // Shape white deviates to the requested covariances via UD factors:
  // cov(U sqrt(D) xi) = U D U^T.
  std::optional<UDFactors> q_factors;
  if (q > 0) q_factors = udu_decompose(*sys.process.q_cov);
  const UDFactors r_factors = udu_decompose(sys.meas.r_cov);

  auto shape = [](const UDFactors& f, std::vector<double> xi) {
    for (std::size_t i = 0; i < xi.size(); ++i) xi[i] *= std::sqrt(std::max(f.d[i], 0.0));
    return f.u.times(xi);
  };

  std::vector<EpochInput> inputs;
  inputs.reserve(cfg.steps);
  std::vector<double> truth = sys.truth_x0;
  const std::vector<double> u;  // built-in models take no known input

  for (std::size_t k = 0; k < cfg.steps; ++k) {
    std::optional<Matrix> g;
    if (q > 0) g = sys.process.jacobian_g(truth, u);  // at the pre-step state
    truth = sys.process.propagate_state(truth, u);
    if (q > 0) {
      const std::vector<double> w = shape(*q_factors, rng.normal_vector(q));
      const std::vector<double> gw = mat_vec(*g, w);
      for (std::size_t i = 0; i < truth.size(); ++i) truth[i] += gw[i];
    }
    std::vector<double> y = sys.meas.predict(truth);
    const std::vector<double> v = shape(r_factors, rng.normal_vector(m));
    for (std::size_t i = 0; i < m; ++i) y[i] += v[i];

    EpochInput input;
    input.u = u;
    input.y = std::move(y);
    inputs.push_back(std::move(input));
  }
  return inputs;
}

}  // namespace udkf
