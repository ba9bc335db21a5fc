#include "upgd/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "upgd/errors.hpp"

namespace upgd {

namespace {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::kTanh:
      return "tanh";
    case Activation::kRelu:
      return "relu";
    case Activation::kIdentity:
      return "identity";
  }
  return "identity";
}

Activation activation_from(const std::string& s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "relu") return Activation::kRelu;
  if (s == "identity") return Activation::kIdentity;
  throw ContractError("checkpoint: unknown activation '" + s + "'");
}

nlohmann::json net_json(const HwgcnNet& net) {
  nlohmann::json j;
  j["role"] = net.role == NetRole::kStepSize ? "step_size" : "perturbation";
  j["layers"] = nlohmann::json::array();
  for (const auto& layer : net.layers) {
    nlohmann::json l;
    l["activation"] = activation_name(layer.activation);
    l["taps"] = nlohmann::json::array();
    for (const auto& t : layer.taps) {
      l["taps"].push_back({{"rows", t.rows()}, {"cols", t.cols()}, {"data", t.values()}});
    }
    j["layers"].push_back(std::move(l));
  }
  return j;
}

HwgcnNet net_from(const nlohmann::json& j) {
  HwgcnNet net;
  const auto role = j.at("role").get<std::string>();
  if (role == "step_size") {
    net.role = NetRole::kStepSize;
  } else if (role == "perturbation") {
    net.role = NetRole::kPerturbation;
  } else {
    throw ContractError("checkpoint: unknown net role '" + role + "'");
  }
  for (const auto& l : j.at("layers")) {
    GraphFilterLayer layer;
    layer.activation = activation_from(l.at("activation").get<std::string>());
    for (const auto& t : l.at("taps")) {
      layer.taps.emplace_back(t.at("rows").get<std::size_t>(), t.at("cols").get<std::size_t>(),
                              t.at("data").get<std::vector<double>>());
    }
    net.layers.push_back(std::move(layer));
  }
  net.validate();
  return net;
}

}  // namespace

nlohmann::json checkpoint_to_json(const Checkpoint& ck) {
  nlohmann::json j;
  j["format"] = "upgd-checkpoint";
  j["version"] = kCheckpointVersion;
  j["num_layers"] = ck.model.num_layers();
  j["layers"] = nlohmann::json::array();
  for (const auto& layer : ck.model.layers) {
    j["layers"].push_back({{"eta_net", net_json(layer.eta_net)}, {"perturb_net", net_json(layer.perturb_net)}});
  }
  j["duals"] = nlohmann::json::array();
  for (const auto& d : ck.duals) {
    j["duals"].push_back({{"lambda_h", d.lambda_h},
                          {"lambda_i", d.lambda_i},
                          {"lambda_j", d.lambda_j},
                          {"lambda_k", d.lambda_k},
                          {"s", d.s}});
  }
  j["config"] = format_config(ck.config);
  return j;
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", std::string()) != "upgd-checkpoint") {
      throw ContractError("checkpoint: unrecognized format tag");
    }
    if (!j.contains("version")) throw ContractError("checkpoint: missing version");
    if (j.at("version").get<int>() != kCheckpointVersion) throw ContractError("checkpoint: unsupported version");
    Checkpoint ck;
    std::istringstream cfg(j.at("config").get<std::string>());
    ck.config = parse_config(cfg);
    for (const auto& l : j.at("layers")) {
      ck.model.layers.push_back({net_from(l.at("eta_net")), net_from(l.at("perturb_net"))});
    }
    if (ck.model.num_layers() != j.at("num_layers").get<std::size_t>()) {
      throw ContractError("checkpoint: layer count mismatch");
    }
    for (const auto& d : j.at("duals")) {
      DualState s;
      s.lambda_h = d.at("lambda_h").get<std::vector<double>>();
      s.lambda_i = d.at("lambda_i").get<std::vector<double>>();
      s.lambda_j = d.at("lambda_j").get<std::vector<double>>();
      s.lambda_k = d.at("lambda_k").get<std::vector<double>>();
      s.s = d.at("s").get<std::array<double, 2>>();
      ck.duals.push_back(std::move(s));
    }
    ck.model.validate(ck.config.sys.num_users);
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream os(path);
  if (!os) throw ContractError("cannot open " + path + " for writing");
  os << checkpoint_to_json(ck).dump(1) << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ContractError("cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("checkpoint: ") + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace upgd
