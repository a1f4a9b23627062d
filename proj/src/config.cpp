#include "mscusum/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mscusum/errors.hpp"
#include "mscusum/montecarlo.hpp"
#include "mscusum/subsets.hpp"

namespace mscusum {

using nlohmann::json;

namespace {

// Every object is read through a Reader so that leftover keys are reported.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail("expected an object");
  }
  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() == 0) {
      for (auto it = j_.begin(); it != j_.end(); ++it) {
        if (!seen_.count(it.key())) fail("unknown key '" + it.key() + "'");
      }
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& get(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) fail("missing key '" + key + "'");
    return j_.at(key);
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (!has(key)) return;
    out = convert<T>(get(key), key);
  }

  template <typename T>
  T require(const std::string& key) {
    return convert<T>(get(key), key);
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(where_ + ": " + what);
  }

 private:
  template <typename T>
  T convert(const json& v, const std::string& key) {
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError("not a number");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError("not an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) {
            throw ConfigError("must be non-negative");
          }
        }
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError("not a string");
      }
      return v.get<T>();
    } catch (const ConfigError& e) {
      fail("key '" + key + "': " + e.what());
    } catch (const json::exception& e) {
      fail("key '" + key + "': " + e.what());
    }
  }

  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

std::vector<int> read_subset(const json& v, const std::string& where) {
  std::vector<int> out;
  if (v.is_number_integer()) {
    const int m = v.get<int>();
    if (m < 1) throw ConfigError(where + ": subset size must be positive");
    for (int i = 1; i <= m; ++i) out.push_back(i);
    return out;
  }
  if (!v.is_array()) throw ConfigError(where + ": expected a sensor list or a size");
  for (const auto& e : v) {
    if (!e.is_number_integer()) throw ConfigError(where + ": sensors are 1-based integers");
    out.push_back(e.get<int>());
  }
  return out;
}

void check_subset(const std::vector<int>& s, std::size_t sensors, const std::string& where) {
  if (s.empty()) throw ConfigError(where + ": empty subset");
  std::set<int> seen;
  for (int k : s) {
    if (k < 1 || static_cast<std::size_t>(k) > sensors) {
      throw ConfigError(where + ": sensor " + std::to_string(k) + " out of range");
    }
    if (!seen.insert(k).second) throw ConfigError(where + ": repeated sensor");
  }
}

ModelConfig read_model(const json& j) {
  Reader r(j, "model");
  ModelConfig m;
  m.sensors = r.require<std::size_t>("sensors");
  if (m.sensors < 1 || m.sensors > kMaxSensors) {
    r.fail("sensors must be in [1, " + std::to_string(kMaxSensors) + "]");
  }
  if (r.has("theta")) {
    if (r.has("shifts")) r.fail("give either 'theta' or 'shifts'");
    m.shifts.assign(m.sensors, r.require<double>("theta"));
  } else {
    m.shifts = r.require<std::vector<double>>("shifts");
  }
  if (m.shifts.size() != m.sensors) r.fail("need one shift per sensor");
  r.read("covariance", m.covariance);
  if (!m.covariance.empty()) {
    if (m.covariance.size() != m.sensors) r.fail("covariance must be sensors x sensors");
    for (const auto& row : m.covariance) {
      if (row.size() != m.sensors) r.fail("covariance must be sensors x sensors");
    }
  }
  return m;
}

ClassConfig read_class(const json& j, const std::string& where) {
  Reader r(j, where);
  ClassConfig c;
  c.kind = r.require<std::string>("kind");
  if (c.kind == "exactly" || c.kind == "at_most") {
    c.size = r.require<int>("size");
    r.read("p", c.p);
  } else if (c.kind == "explicit" || c.kind == "product") {
    const json& mem = r.get("members");
    if (!mem.is_array()) r.fail("members must be a list of sensor lists");
    for (const auto& m : mem) c.members.push_back(read_subset(m, r.path("members")));
    r.read("weights", c.weights);
  } else {
    r.fail("unknown class kind '" + c.kind + "'");
  }
  return c;
}

DetectorConfig read_detector(const json& j, std::size_t index) {
  const std::string where = "detectors[" + std::to_string(index) + "]";
  Reader r(j, where);
  DetectorConfig d;
  d.rule = r.require<std::string>("rule");
  r.read("label", d.label);
  if (r.has("subset")) d.subset = read_subset(r.get("subset"), r.path("subset"));
  if (r.has("class")) d.subset_class = read_class(r.get("class"), r.path("class"));
  r.read("top", d.top);
  r.read("p", d.p);
  r.read("pi", d.pi);
  r.read("window", d.window);
  r.read("thresholds", d.thresholds);
  return d;
}

json write_class(const ClassConfig& c) {
  json j;
  j["kind"] = c.kind;
  if (c.kind == "exactly" || c.kind == "at_most") {
    j["size"] = c.size;
    j["p"] = c.p;
  } else {
    j["members"] = c.members;
    if (!c.weights.empty()) j["weights"] = c.weights;
  }
  return j;
}

void validate(const ExperimentConfig& c) {
  const auto model = build_model(c.model);
  std::set<std::string> labels;
  for (const auto& d : c.detectors) {
    const std::string label = detector_label(d);
    if (!labels.insert(label).second) {
      throw ConfigError("detector label '" + label + "' is not unique");
    }
    DetectorSpec spec;
    try {
      spec = build_detector(d, c.model.sensors);
      if (spec.rule != Rule::oracle || spec.subset != 0) make_detector(spec, *model);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError("detector '" + label + "': " + e.what());
    }
    for (std::size_t i = 0; i < d.thresholds.size(); ++i) {
      if (!std::isfinite(d.thresholds[i]) || (i > 0 && !(d.thresholds[i] > d.thresholds[i - 1]))) {
        throw ConfigError("detector '" + label + "': thresholds must be finite and increasing");
      }
    }
  }
  for (std::size_t i = 0; i < c.table.size(); ++i) {
    const auto& row = c.table[i];
    const std::string where = "table[" + std::to_string(i) + "]";
    const DetectorConfig* d = nullptr;
    for (const auto& cand : c.detectors) {
      if (detector_label(cand) == row.detector) d = &cand;
    }
    if (!d) throw ConfigError(where + ": unknown detector '" + row.detector + "'");
    if (row.affected < 1 || static_cast<std::size_t>(row.affected) > c.model.sensors) {
      throw ConfigError(where + ": affected count out of range");
    }
    try {
      auto spec = build_detector(*d, c.model.sensors);
      spec = resolve_oracle(spec, full_set(static_cast<std::size_t>(row.affected)));
      make_detector(spec, *model)->validate_threshold(row.threshold);
    } catch (const std::exception& e) {
      throw ConfigError(where + ": threshold " + std::to_string(row.threshold) +
                        " does not fit detector '" + row.detector + "': " + e.what());
    }
  }
  for (std::size_t i = 0; i < c.scenarios.size(); ++i) {
    check_subset(c.scenarios[i], c.model.sensors, "scenarios[" + std::to_string(i) + "]");
  }
  for (double g : c.gammas) {
    if (!(g > 1.0) || !std::isfinite(g)) throw ConfigError("gammas must exceed 1");
  }
  if (c.runs.delay == 0 || c.runs.calibration == 0) {
    throw ConfigError("runs.delay and runs.calibration must be positive");
  }
  if (!(c.rel_tol > 0.0 && c.rel_tol < 1.0)) throw ConfigError("rel_tol must be in (0, 1)");
  const auto& f = c.figure1;
  if (!(f.theta1 > 0.0 && f.theta2_min > 0.0 && f.theta2_max >= f.theta2_min) || f.points < 1 ||
      !(f.gamma > 1.0)) {
    throw ConfigError("figure1: need positive shifts, a nonempty range and gamma > 1");
  }
  for (double g : f.ratio_gammas) {
    if (!(g > 1.0)) throw ConfigError("figure1.ratio_gammas must exceed 1");
  }
  for (double t : c.constants_thetas) {
    if (t == 0.0 || !std::isfinite(t)) throw ConfigError("constants.thetas must be nonzero");
  }
}

}  // namespace

std::string detector_label(const DetectorConfig& config) {
  if (!config.label.empty()) return config.label;
  return config.rule;
}

std::unique_ptr<SensorModel> build_model(const ModelConfig& config) {
  try {
    if (config.covariance.empty()) return std::make_unique<GaussianModel>(config.shifts);
    std::vector<double> flat;
    for (const auto& row : config.covariance) flat.insert(flat.end(), row.begin(), row.end());
    return std::make_unique<CorrelatedGaussianModel>(std::move(flat), config.shifts);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
}

DetectorSpec build_detector(const DetectorConfig& config, std::size_t sensors) {
  const std::string where = "detector '" + detector_label(config) + "'";
  DetectorSpec spec;
  try {
    spec.rule = parse_rule(config.rule);
  } catch (const std::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
  spec.label = config.label;
  if (!config.subset.empty()) {
    check_subset(config.subset, sensors, where + ".subset");
    spec.subset = make_subset(config.subset);
  }
  if (config.subset_class) {
    const auto& c = *config.subset_class;
    try {
      if (c.kind == "exactly") {
        spec.subset_class = SubsetClass::exactly(sensors, c.size, c.p);
      } else if (c.kind == "at_most") {
        spec.subset_class = SubsetClass::at_most(sensors, c.size, c.p);
      } else {
        std::vector<Subset> members;
        for (const auto& m : c.members) {
          check_subset(m, sensors, where + ".class.members");
          members.push_back(make_subset(m));
        }
        spec.subset_class = c.kind == "explicit"
                                ? SubsetClass::explicit_list(sensors, members, c.weights)
                                : SubsetClass::explicit_product(sensors, members, c.weights);
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(where + ".class: " + e.what());
    }
  }
  spec.top = config.top;
  spec.p = config.p;
  spec.pi = config.pi;
  if (config.window == "regeneration") {
    spec.window = WindowKind::regeneration;
  } else if (config.window == "sigma") {
    spec.window = WindowKind::sigma;
  } else {
    throw ConfigError(where + ": window must be 'regeneration' or 'sigma'");
  }
  return spec;
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  ExperimentConfig c;
  {
    Reader r(j, "config");
    c.model = read_model(r.get("model"));
    if (r.has("detectors")) {
      const json& ds = r.get("detectors");
      if (!ds.is_array()) r.fail("detectors must be a list");
      for (std::size_t i = 0; i < ds.size(); ++i) c.detectors.push_back(read_detector(ds[i], i));
    }
    if (r.has("table")) {
      const json& rows = r.get("table");
      if (!rows.is_array()) r.fail("table must be a list");
      for (std::size_t i = 0; i < rows.size(); ++i) {
        Reader rr(rows[i], "table[" + std::to_string(i) + "]");
        TableRow row;
        row.detector = rr.require<std::string>("detector");
        row.affected = rr.require<int>("affected");
        row.threshold = rr.require<double>("threshold");
        c.table.push_back(row);
      }
    }
    if (r.has("scenarios")) {
      const json& sc = r.get("scenarios");
      if (!sc.is_array()) r.fail("scenarios must be a list");
      for (const auto& s : sc) c.scenarios.push_back(read_subset(s, "scenarios"));
    }
    r.read("gammas", c.gammas);
    if (r.has("runs")) {
      Reader rr(r.get("runs"), "runs");
      rr.read("arl", c.runs.arl);
      rr.read("delay", c.runs.delay);
      rr.read("calibration", c.runs.calibration);
    }
    r.read("seed", c.seed);
    r.read("horizon", c.horizon);
    r.read("rel_tol", c.rel_tol);
    r.read("confirmation_factor", c.confirmation_factor);
    r.read("output", c.output);
    if (r.has("figure1")) {
      Reader rr(r.get("figure1"), "figure1");
      rr.read("theta1", c.figure1.theta1);
      if (rr.has("theta2")) {
        const auto range = rr.require<std::vector<double>>("theta2");
        if (range.size() != 2) rr.fail("theta2 is a [min, max] pair");
        c.figure1.theta2_min = range[0];
        c.figure1.theta2_max = range[1];
      }
      rr.read("points", c.figure1.points);
      rr.read("gamma", c.figure1.gamma);
      rr.read("ratio_gammas", c.figure1.ratio_gammas);
    }
    if (r.has("constants")) {
      Reader rr(r.get("constants"), "constants");
      rr.read("thetas", c.constants_thetas);
    }
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  json j;
  j["model"]["sensors"] = c.model.sensors;
  j["model"]["shifts"] = c.model.shifts;
  if (!c.model.covariance.empty()) j["model"]["covariance"] = c.model.covariance;
  j["detectors"] = json::array();
  for (const auto& d : c.detectors) {
    json dj;
    dj["rule"] = d.rule;
    if (!d.label.empty()) dj["label"] = d.label;
    if (!d.subset.empty()) dj["subset"] = d.subset;
    if (d.subset_class) dj["class"] = write_class(*d.subset_class);
    dj["top"] = d.top;
    dj["p"] = d.p;
    dj["pi"] = d.pi;
    dj["window"] = d.window;
    if (!d.thresholds.empty()) dj["thresholds"] = d.thresholds;
    j["detectors"].push_back(dj);
  }
  j["table"] = json::array();
  for (const auto& row : c.table) {
    j["table"].push_back({{"detector", row.detector},
                          {"affected", row.affected},
                          {"threshold", row.threshold}});
  }
  j["scenarios"] = c.scenarios;
  j["gammas"] = c.gammas;
  j["runs"] = {{"arl", c.runs.arl}, {"delay", c.runs.delay}, {"calibration", c.runs.calibration}};
  j["seed"] = c.seed;
  j["horizon"] = c.horizon;
  j["rel_tol"] = c.rel_tol;
  j["confirmation_factor"] = c.confirmation_factor;
  j["output"] = c.output;
  j["figure1"] = {{"theta1", c.figure1.theta1},
                  {"theta2", {c.figure1.theta2_min, c.figure1.theta2_max}},
                  {"points", c.figure1.points},
                  {"gamma", c.figure1.gamma},
                  {"ratio_gammas", c.figure1.ratio_gammas}};
  j["constants"] = {{"thetas", c.constants_thetas}};
  return j.dump(2) + "\n";
}

}  // namespace mscusum
