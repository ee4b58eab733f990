#include "gridalloc/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gridalloc {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  std::size_t e = s.find_last_not_of(" \t");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::size_t parse_size(const std::string& v, const std::string& key) {
  try {
    long long n = std::stoll(v);
    if (n < 0) throw std::invalid_argument(v);
    return static_cast<std::size_t>(n);
  } catch (const std::exception&) {
    throw std::runtime_error("config key '" + key + "': invalid integer '" + v + "'");
  }
}

double parse_real(const std::string& v, const std::string& key) {
  try {
    return std::stod(v);
  } catch (const std::exception&) {
    throw std::runtime_error("config key '" + key + "': invalid number '" + v + "'");
  }
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::runtime_error("config key '" + key + "': invalid boolean '" + v + "'");
}

}  // namespace

void apply_override(RunConfig& c, const std::string& key, const std::string& value) {
  if (key == "region_file") c.region_file = value;
  else if (key == "landuse_file") c.landuse_file = value;
  else if (key == "indicators_file") c.indicators_file = value;
  else if (key == "facilities_file") c.facilities_file = value;
  else if (key == "out_dir") c.out_dir = value;
  else if (key == "grid_target") c.grid_target = parse_size(value, key);
  else if (key == "grid_quantum") c.grid_quantum = parse_real(value, key);
  else if (key == "epochs") c.train.epochs = parse_size(value, key);
  else if (key == "learning_rate") c.train.learning_rate = parse_real(value, key);
  else if (key == "optimizer") {
    if (value == "adam") c.train.optimizer = TrainConfig::Optimizer::Adam;
    else if (value == "gd") c.train.optimizer = TrainConfig::Optimizer::GradientDescent;
    else throw std::runtime_error("config key 'optimizer': expected adam or gd, got '" + value + "'");
  } else if (key == "seed") c.train.seed = static_cast<std::uint64_t>(parse_size(value, key));
  else if (key == "tau") c.train.tau = parse_real(value, key);
  else if (key == "dim") c.train.dim = parse_size(value, key);
  else if (key == "heads") c.train.heads = parse_size(value, key);
  else if (key == "layers") c.train.layers = parse_size(value, key);
  else if (key == "epsilon_smooth") c.train.epsilon_smooth = parse_real(value, key);
  else if (key == "patience") c.train.patience = parse_size(value, key);
  else if (key == "train_regions") c.train_region_ids = split_list(value);
  else if (key == "test_regions") c.test_region_ids = split_list(value);
  else if (key == "civd_k") c.civd_k = parse_size(value, key);
  else if (key == "synth") c.synth = parse_bool(value, key);
  else if (key == "synth_train_regions") c.synth_train_regions = parse_size(value, key);
  else if (key == "synth_test_regions") c.synth_test_regions = parse_size(value, key);
  else if (key == "synth_cells") c.synth_cells = parse_size(value, key);
  else if (key == "synth_facilities") c.synth_facilities = parse_size(value, key);
  else if (key.rfind("gpm_weight_", 0) == 0)
    c.gpm_weights[key.substr(11)] = parse_real(value, key);
  else
    throw std::runtime_error("unknown config key '" + key + "'");
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path.string());
  RunConfig c;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected key = value");
    apply_override(c, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
  return c;
}

std::map<std::string, std::string> RunConfig::snapshot() const {
  std::map<std::string, std::string> m;
  auto num = [](auto v) { return std::to_string(v); };
  m["region_file"] = region_file.string();
  m["landuse_file"] = landuse_file.string();
  m["indicators_file"] = indicators_file.string();
  m["facilities_file"] = facilities_file.string();
  m["out_dir"] = out_dir.string();
  m["grid_target"] = num(grid_target);
  m["grid_quantum"] = num(grid_quantum);
  m["epochs"] = num(train.epochs);
  m["learning_rate"] = num(train.learning_rate);
  m["optimizer"] = train.optimizer == TrainConfig::Optimizer::Adam ? "adam" : "gd";
  m["seed"] = num(train.seed);
  m["tau"] = num(train.tau);
  m["dim"] = num(train.dim);
  m["heads"] = num(train.heads);
  m["layers"] = num(train.layers);
  m["epsilon_smooth"] = num(train.epsilon_smooth);
  m["patience"] = num(train.patience);
  m["civd_k"] = num(civd_k);
  m["synth"] = synth ? "true" : "false";
  m["synth_train_regions"] = num(synth_train_regions);
  m["synth_test_regions"] = num(synth_test_regions);
  m["synth_cells"] = num(synth_cells);
  m["synth_facilities"] = num(synth_facilities);
  std::string train_list, test_list;
  for (const auto& r : train_region_ids) train_list += (train_list.empty() ? "" : ",") + r;
  for (const auto& r : test_region_ids) test_list += (test_list.empty() ? "" : ",") + r;
  m["train_regions"] = train_list;
  m["test_regions"] = test_list;
  for (const auto& [cls, w] : gpm_weights) m["gpm_weight_" + cls] = num(w);
  return m;
}

}  // namespace gridalloc
