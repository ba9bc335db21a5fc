#include <sstream>
#include <string>
#include <vector>

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cli.hpp"
#include "upgd/config.hpp"
#include "upgd/cost.hpp"
#include "upgd/dataset.hpp"
#include "upgd/equivariance.hpp"
#include "upgd/errors.hpp"
#include "upgd/evaluate.hpp"
#include "upgd/learn.hpp"

namespace py = pybind11;
using namespace upgd;

namespace {

RunConfig config_from_text(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

SystemParams system_params(std::size_t k, std::size_t nt, double snr_db) {
  SystemParams sys;
  sys.num_users = k;
  sys.num_antennas = nt;
  sys.max_power = power_from_snr_db(snr_db);
  return SystemParams::with_uniform_weights(sys);
}

py::dict report_dict(const EvalReport& rep) {
  py::dict d;
  d["num_samples"] = rep.rows.size();
  d["num_feasible"] = rep.num_feasible;
  d["feasible_fraction"] = rep.w2;
  d["mean_wsr"] = rep.mean_wsr;
  std::vector<double> wsr;
  std::vector<double> vg;
  for (const auto& r : rep.rows) {
    wsr.push_back(r.wsr);
    vg.push_back(r.vg);
  }
  d["wsr"] = wsr;
  d["vg"] = vg;
  return d;
}

py::dict train_and_evaluate(const std::string& config_text) {
  const RunConfig cfg = config_from_text(config_text);
  std::vector<Sample> train;
  std::vector<Sample> test;
  TrainResult result;
  {
    py::gil_scoped_release release;
    train = make_samples(generate_dataset(cfg.train_header()));
    test = make_samples(generate_dataset(cfg.test_header()));
    result = train_usrmnet(UsrmNet::make_default(cfg.sys.num_users, cfg.num_layers, cfg.filter_order, cfg.model_seed()),
                           train, test, cfg.train);
  }
  py::list logs;
  for (const auto& log : result.logs) {
    py::dict cols;
    std::vector<double> loss, wsr, vg, s1, s2, lam, test_wsr, test_vg;
    for (const auto& r : log.records) {
      loss.push_back(r.loss);
      wsr.push_back(r.wsr);
      vg.push_back(r.vg);
      s1.push_back(r.s1);
      s2.push_back(r.s2);
      lam.push_back(r.lambda_norm);
      test_wsr.push_back(r.test_wsr);
      test_vg.push_back(r.test_vg);
    }
    cols["loss"] = loss;
    cols["wsr"] = wsr;
    cols["vg"] = vg;
    cols["s1"] = s1;
    cols["s2"] = s2;
    cols["lambda_norm"] = lam;
    cols["test_wsr"] = test_wsr;
    cols["test_vg"] = test_vg;
    logs.append(cols);
  }
  py::dict out;
  out["logs"] = logs;
  out["report"] = report_dict(evaluate(result.model, test));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Unrolled projected-gradient beamforming for short-packet downlinks";

  py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<InfeasibleError>(m, "InfeasibleError", PyExc_RuntimeError);

  m.def("qfunc", &qfunc, py::arg("z"));
  m.def("qfunc_inv", &qfunc_inv, py::arg("p"));
  m.def("dispersion", &dispersion, py::arg("gamma"));
  m.def("fbl_rate", &fbl_rate, py::arg("gamma"), py::arg("vartheta"));
  m.def("sinr_floor", py::overload_cast<double, double>(&nu3), py::arg("rate_target"), py::arg("vartheta"),
        "Smallest SINR whose finite-blocklength rate meets the target (nats per symbol).");

  m.def(
      "usrmnet_flops",
      [](std::size_t k, std::size_t nt, std::size_t l) { return usrmnet_flops(CostConfig::standard(k, nt, l)); },
      py::arg("num_users"), py::arg("num_antennas") = 32, py::arg("num_layers") = 2);
  m.def(
      "hebf_flops",
      [](std::size_t k, std::size_t nt, double updates) {
        CostConfig c = CostConfig::standard(k, nt, 2);
        c.baseline_updates = updates;
        return hebf_flops(c);
      },
      py::arg("num_users"), py::arg("num_antennas") = 32, py::arg("updates") = 3.0);
  m.def(
      "ratio_w3",
      [](std::size_t k, std::size_t nt, std::size_t l) { return ratio_w3(CostConfig::standard(k, nt, l)); },
      py::arg("num_users"), py::arg("num_antennas") = 32, py::arg("num_layers") = 2);

  m.def(
      "channel",
      [](std::uint64_t seed, std::size_t k, std::size_t nt, double snr_db) {
        return channel_gen(seed, system_params(k, nt, snr_db), Geometry{}).H;
      },
      py::arg("seed"), py::arg("num_users"), py::arg("num_antennas"), py::arg("snr_db") = 15.0,
      "K x N_t complex channel matrix (rows h_k^H) of one seeded draw.");
  m.def(
      "oracle_wsr",
      [](std::uint64_t seed, std::size_t k, std::size_t nt, double snr_db, std::size_t grid) {
        const OracleResult r = oracle_wsr(channel_gen(seed, system_params(k, nt, snr_db), Geometry{}), grid);
        py::dict d;
        d["feasible"] = r.feasible;
        d["wsr"] = r.wsr;
        d["q"] = r.q;
        return d;
      },
      py::arg("seed"), py::arg("num_users"), py::arg("num_antennas"), py::arg("snr_db") = 15.0,
      py::arg("grid") = 200);
  m.def(
      "permtest",
      [](std::size_t k, std::size_t nt, std::size_t trials, std::uint64_t seed) {
        const auto rep = equivariance_suite(system_params(k, nt, 15.0), Geometry{}, seed, trials);
        return rep.max_deviation;
      },
      py::arg("num_users") = 4, py::arg("num_antennas") = 8, py::arg("trials") = 20, py::arg("seed") = 1,
      "Largest relabeling-symmetry deviation per component.");
  m.def("format_config", [](const std::string& text) { return format_config(config_from_text(text)); },
        py::arg("text"), "Parses a key = value configuration and prints it with every key filled in.");
  m.def("train_and_evaluate", &train_and_evaluate, py::arg("config"),
        "Generates the train/test splits of a key = value configuration, trains layer by layer and "
        "evaluates on the test split.");
  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<std::string> full{"upgd"};
        full.insert(full.end(), args.begin(), args.end());
        std::vector<const char*> argv;
        for (const auto& a : full) argv.push_back(a.c_str());
        std::ostringstream out;
        std::ostringstream err;
        const int rc = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(rc, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool in-process; returns (exit_code, stdout, stderr).");
}
