#include "upgd/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "upgd/dataset.hpp"
#include "upgd/errors.hpp"

namespace upgd {

std::uint64_t RunConfig::train_data_seed() const { return sample_seed(seed, 0x7261696eULL); }
std::uint64_t RunConfig::test_data_seed() const { return sample_seed(seed, 0x74657374ULL); }
std::uint64_t RunConfig::model_seed() const { return sample_seed(seed, 0x6d6f646cULL); }

DatasetHeader RunConfig::train_header() const { return {sys, geo, train_data_seed(), num_train}; }
DatasetHeader RunConfig::test_header() const { return {sys, geo, test_data_seed(), num_test}; }

void RunConfig::finalize() {
  if (sys.weights.empty()) sys = SystemParams::with_uniform_weights(sys);
  train.seed = sample_seed(seed, 0x73687566ULL);
  sys.validate();
  geo.validate();
  train.validate();
  if (num_layers < 1) throw ContractError("num_layers must be >= 1");
  if (filter_order < 1) throw ContractError("filter_order must be >= 1");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ContractError("not a number: '" + v + "'");
  return out;
}

std::uint64_t to_uint(const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ContractError("not a nonnegative integer: '" + v + "'");
  return out;
}

std::vector<double> to_list(const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(trim(item)));
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"num_users", [](RunConfig& c, const std::string& v) { c.sys.num_users = to_uint(v); }},
      {"num_antennas", [](RunConfig& c, const std::string& v) { c.sys.num_antennas = to_uint(v); }},
      {"snr_db", [](RunConfig& c, const std::string& v) { c.snr_db = to_double(v); }},
      {"max_power", [](RunConfig& c, const std::string& v) { c.sys.max_power = to_double(v); }},
      {"sigma", [](RunConfig& c, const std::string& v) { c.sys.sigma = to_double(v); }},
      {"blocklength", [](RunConfig& c, const std::string& v) { c.sys.blocklength = to_uint(v); }},
      {"payload_bits", [](RunConfig& c, const std::string& v) { c.sys.payload_bits = to_double(v); }},
      {"error_prob", [](RunConfig& c, const std::string& v) { c.sys.error_prob = to_double(v); }},
      {"weights", [](RunConfig& c, const std::string& v) { c.sys.weights = to_list(v); }},
      {"ref_distance", [](RunConfig& c, const std::string& v) { c.geo.ref_distance = to_double(v); }},
      {"path_loss_exponent", [](RunConfig& c, const std::string& v) { c.geo.exponent = to_double(v); }},
      {"min_distance", [](RunConfig& c, const std::string& v) { c.geo.min_distance = to_double(v); }},
      {"max_distance", [](RunConfig& c, const std::string& v) { c.geo.max_distance = to_double(v); }},
      {"num_train", [](RunConfig& c, const std::string& v) { c.num_train = to_uint(v); }},
      {"num_test", [](RunConfig& c, const std::string& v) { c.num_test = to_uint(v); }},
      {"num_layers", [](RunConfig& c, const std::string& v) { c.num_layers = to_uint(v); }},
      {"filter_order", [](RunConfig& c, const std::string& v) { c.filter_order = to_uint(v); }},
      {"lr_theta", [](RunConfig& c, const std::string& v) { c.train.lr_theta = to_double(v); }},
      {"lr_scale", [](RunConfig& c, const std::string& v) { c.train.lr_scale = to_double(v); }},
      {"lr_dual", [](RunConfig& c, const std::string& v) { c.train.lr_dual = to_double(v); }},
      {"batch_size", [](RunConfig& c, const std::string& v) { c.train.batch_size = to_uint(v); }},
      {"epochs", [](RunConfig& c, const std::string& v) { c.train.epochs = to_uint(v); }},
      {"init_scale",
       [](RunConfig& c, const std::string& v) {
         const auto s = to_list(v);
         if (s.size() != 2) throw ContractError("init_scale needs two values");
         c.train.init_scale = {s[0], s[1]};
       }},
      {"seed", [](RunConfig& c, const std::string& v) { c.seed = to_uint(v); }},
  };
  return table;
}

}  // namespace

RunConfig parse_config(std::istream& is) {
  RunConfig cfg;
  std::set<std::string> seen;
  bool power_given = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) throw ContractError(where + "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ContractError(where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ContractError(where + "repeated key '" + key + "'");
    try {
      it->second(cfg, value);
    } catch (const ContractError& e) {
      throw ContractError(where + key + ": " + e.what());
    }
    power_given = power_given || key == "max_power";
  }
  if (!power_given) cfg.sys.max_power = power_from_snr_db(cfg.snr_db, cfg.sys.sigma);
  if (!seen.count("weights")) cfg.sys.weights.clear();
  cfg.finalize();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ContractError("cannot open config " + path);
  return parse_config(is);
}

std::string format_config(const RunConfig& c) {
  std::ostringstream os;
  os.precision(std::numeric_limits<double>::max_digits10);
  auto list = [&](const auto& v) {
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  };
  os << "num_users = " << c.sys.num_users << '\n'
     << "num_antennas = " << c.sys.num_antennas << '\n'
     << "snr_db = " << c.snr_db << '\n'
     << "max_power = " << c.sys.max_power << '\n'
     << "sigma = " << c.sys.sigma << '\n'
     << "blocklength = " << c.sys.blocklength << '\n'
     << "payload_bits = " << c.sys.payload_bits << '\n'
     << "error_prob = " << c.sys.error_prob << '\n'
     << "weights = ";
  list(c.sys.weights);
  os << '\n'
     << "ref_distance = " << c.geo.ref_distance << '\n'
     << "path_loss_exponent = " << c.geo.exponent << '\n'
     << "min_distance = " << c.geo.min_distance << '\n'
     << "max_distance = " << c.geo.max_distance << '\n'
     << "num_train = " << c.num_train << '\n'
     << "num_test = " << c.num_test << '\n'
     << "num_layers = " << c.num_layers << '\n'
     << "filter_order = " << c.filter_order << '\n'
     << "lr_theta = " << c.train.lr_theta << '\n'
     << "lr_scale = " << c.train.lr_scale << '\n'
     << "lr_dual = " << c.train.lr_dual << '\n'
     << "batch_size = " << c.train.batch_size << '\n'
     << "epochs = " << c.train.epochs << '\n'
     << "init_scale = ";
  list(c.train.init_scale);
  os << '\n' << "seed = " << c.seed << '\n';
  return os.str();
}

}  // namespace upgd
