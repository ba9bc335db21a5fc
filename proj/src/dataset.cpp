#include "upgd/dataset.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "upgd/errors.hpp"

namespace upgd {

namespace {

constexpr const char* kFormat = "upgd-dataset";
constexpr int kVersion = 1;

void put_f64(std::ostream& os, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), 8);
}

double get_f64(std::istream& is) {
  unsigned char buf[8];
  if (!is.read(reinterpret_cast<char*>(buf), 8)) throw ContractError("dataset: truncated channel block");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

nlohmann::json header_json(const DatasetHeader& h) {
  nlohmann::json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["num_users"] = h.sys.num_users;
  j["num_antennas"] = h.sys.num_antennas;
  j["max_power"] = h.sys.max_power;
  j["sigma"] = h.sys.sigma;
  j["blocklength"] = h.sys.blocklength;
  j["payload_bits"] = h.sys.payload_bits;
  j["error_prob"] = h.sys.error_prob;
  j["weights"] = h.sys.weights;
  j["ref_distance"] = h.geo.ref_distance;
  j["path_loss_exponent"] = h.geo.exponent;
  j["min_distance"] = h.geo.min_distance;
  j["max_distance"] = h.geo.max_distance;
  j["seed"] = h.seed;
  j["count"] = h.count;
  return j;
}

DatasetHeader header_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string()) != kFormat) throw ContractError("dataset: unrecognized format tag");
  if (j.value("version", 0) != kVersion) throw ContractError("dataset: unsupported version");
  DatasetHeader h;
  h.sys.num_users = j.at("num_users").get<std::size_t>();
  h.sys.num_antennas = j.at("num_antennas").get<std::size_t>();
  h.sys.max_power = j.at("max_power").get<double>();
  h.sys.sigma = j.at("sigma").get<double>();
  h.sys.blocklength = j.at("blocklength").get<std::size_t>();
  h.sys.payload_bits = j.at("payload_bits").get<double>();
  h.sys.error_prob = j.at("error_prob").get<double>();
  h.sys.weights = j.at("weights").get<std::vector<double>>();
  h.geo.ref_distance = j.at("ref_distance").get<double>();
  h.geo.exponent = j.at("path_loss_exponent").get<double>();
  h.geo.min_distance = j.at("min_distance").get<double>();
  h.geo.max_distance = j.at("max_distance").get<double>();
  h.seed = j.at("seed").get<std::uint64_t>();
  h.count = j.at("count").get<std::size_t>();
  h.sys.validate();
  h.geo.validate();
  return h;
}

}  // namespace

std::uint64_t sample_seed(std::uint64_t dataset_seed, std::size_t index) {
  // splitmix64 finalizer over (seed, index)
  std::uint64_t z = dataset_seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(index) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Dataset generate_dataset(const DatasetHeader& header) {
  header.sys.validate();
  header.geo.validate();
  Dataset ds;
  ds.header = header;
  ds.realizations.reserve(header.count);
  for (std::size_t i = 0; i < header.count; ++i) {
    ds.realizations.push_back(channel_gen(sample_seed(header.seed, i), header.sys, header.geo));
  }
  return ds;
}

void write_dataset(std::ostream& os, const Dataset& ds) {
  if (ds.realizations.size() != ds.header.count) throw ContractError("dataset: count does not match samples");
  os << header_json(ds.header).dump() << '\n';
  for (const auto& r : ds.realizations) {
    if (r.num_users() != ds.header.sys.num_users || r.num_antennas() != ds.header.sys.num_antennas) {
      throw ContractError("dataset: sample shape differs from header");
    }
    for (Eigen::Index k = 0; k < r.H.rows(); ++k) {
      for (Eigen::Index m = 0; m < r.H.cols(); ++m) {
        put_f64(os, r.H(k, m).real());
        put_f64(os, r.H(k, m).imag());
      }
    }
  }
  if (!os) throw std::runtime_error("dataset: write failed");
}

Dataset read_dataset(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ContractError("dataset: missing header line");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("dataset: malformed header: ") + e.what());
  }
  Dataset ds;
  ds.header = header_from_json(j);
  const auto k_users = static_cast<Eigen::Index>(ds.header.sys.num_users);
  const auto nt = static_cast<Eigen::Index>(ds.header.sys.num_antennas);
  ds.realizations.reserve(ds.header.count);
  for (std::size_t i = 0; i < ds.header.count; ++i) {
    CMatrix h(k_users, nt);
    for (Eigen::Index k = 0; k < k_users; ++k) {
      for (Eigen::Index m = 0; m < nt; ++m) {
        const double re = get_f64(is);
        const double im = get_f64(is);
        h(k, m) = {re, im};
      }
    }
    ds.realizations.push_back(make_realization(std::move(h), ds.header.sys, sample_seed(ds.header.seed, i)));
  }
  if (is.peek() != std::char_traits<char>::eof()) throw ContractError("dataset: trailing bytes after samples");
  return ds;
}

void save_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ContractError("cannot open " + path + " for writing");
  write_dataset(os, ds);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ContractError("cannot open " + path);
  return read_dataset(is);
}

std::vector<Sample> make_samples(const Dataset& ds) {
  std::vector<Sample> out;
  out.reserve(ds.realizations.size());
  for (const auto& r : ds.realizations) out.push_back(make_sample(r));
  return out;
}

}  // namespace upgd
