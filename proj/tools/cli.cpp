#include "cli.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "upgd/checkpoint.hpp"
#include "upgd/config.hpp"
#include "upgd/cost.hpp"
#include "upgd/dataset.hpp"
#include "upgd/equivariance.hpp"
#include "upgd/errors.hpp"
#include "upgd/evaluate.hpp"
#include "upgd/learn.hpp"

namespace upgd {

namespace {

constexpr const char* kFooter = R"(Output columns:
  train log CSV : epoch,layer,loss,wsr,vg,s1,s2,lambda_norm,test_wsr,test_vg
  eval CSV      : index,wsr,rate,vg,feasible
  cost CSV      : K,Nt,L,usrmnet_flops,hebf_flops,w3_percent
Exit status: 0 success, 1 invalid input, 2 numeric failure.)";

struct Globals {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

RunConfig resolve_config(const Globals& g) {
  RunConfig cfg;
  if (!g.config.empty()) {
    cfg = load_config(g.config);
  } else {
    std::istringstream empty;
    cfg = parse_config(empty);
  }
  if (g.seed_given) {
    cfg.seed = g.seed;
    cfg.finalize();
  }
  return cfg;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ContractError("cannot open " + path + " for writing");
  return os;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Unrolled projected-gradient beamforming for short-packet downlinks"};
  app.footer(kFooter);
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "output path");
  app.add_option_function<std::uint64_t>(
      "--seed", [&](std::uint64_t s) { g.seed = s, g.seed_given = true; }, "master seed");

  // gen
  auto* gen = app.add_subcommand("gen", "generate a dataset file")->fallthrough();
  std::string split = "train";
  std::size_t count = 0;
  gen->add_option("--split", split, "train or test")->check(CLI::IsMember({"train", "test"}));
  gen->add_option("--count", count, "number of samples (default from config)");

  // train
  auto* train = app.add_subcommand("train", "train a model, write checkpoint and CSV log")->fallthrough();
  std::string log_path;
  train->add_option("--log", log_path, "training log CSV (default <out>.csv)");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset")->fallthrough();
  std::string model_path;
  std::string data_path;
  eval->add_option("--model", model_path, "checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("--data", data_path, "dataset file")->required()->check(CLI::ExistingFile);

  // permtest
  auto* perm = app.add_subcommand("permtest", "relabeling symmetry suite, prints the max deviation")->fallthrough();
  std::size_t perm_k = 4;
  std::size_t perm_nt = 8;
  std::size_t perm_trials = 100;
  perm->add_option("--K", perm_k, "users")->check(CLI::PositiveNumber);
  perm->add_option("--Nt", perm_nt, "antennas")->check(CLI::PositiveNumber);
  perm->add_option("--trials", perm_trials, "random permutations")->check(CLI::PositiveNumber);

  // cost
  auto* cost = app.add_subcommand("cost", "operation-count table")->fallthrough();
  std::vector<std::size_t> cost_k{4, 6, 8, 10};
  std::size_t cost_nt = 32;
  std::size_t cost_l = 2;
  double cost_updates = 3.0;
  cost->add_option("--K", cost_k, "users (repeatable)")->check(CLI::PositiveNumber);
  cost->add_option("--Nt", cost_nt, "antennas")->check(CLI::PositiveNumber);
  cost->add_option("--L", cost_l, "layers")->check(CLI::PositiveNumber);
  cost->add_option("--updates", cost_updates, "baseline beamformer updates")->check(CLI::PositiveNumber);

  // oracle
  auto* oracle = app.add_subcommand("oracle", "grid-search reference comparison (K <= 3)")->fallthrough();
  std::size_t grid = 200;
  oracle->add_option("--model", model_path, "checkpoint")->required()->check(CLI::ExistingFile);
  oracle->add_option("--data", data_path, "dataset file")->required()->check(CLI::ExistingFile);
  oracle->add_option("--grid", grid, "coarse grid resolution per user")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (gen->parsed()) {
      if (g.out.empty()) throw ContractError("gen needs --out");
      const RunConfig cfg = resolve_config(g);
      DatasetHeader h = split == "train" ? cfg.train_header() : cfg.test_header();
      if (count > 0) h.count = count;
      save_dataset(g.out, generate_dataset(h));
      out << "wrote " << h.count << " samples to " << g.out << '\n';
    } else if (train->parsed()) {
      if (g.out.empty()) throw ContractError("train needs --out");
      const RunConfig cfg = resolve_config(g);
      const auto train_samples = make_samples(generate_dataset(cfg.train_header()));
      const auto test_samples = make_samples(generate_dataset(cfg.test_header()));
      UsrmNet model = UsrmNet::make_default(cfg.sys.num_users, cfg.num_layers, cfg.filter_order, cfg.model_seed());
      auto result = train_usrmnet(std::move(model), train_samples, test_samples, cfg.train, [&](const EpochRecord& r) {
        out << "layer " << r.layer << " epoch " << r.epoch << " loss " << r.loss << " test_wsr " << r.test_wsr
            << " test_vg " << r.test_vg << '\n';
      });
      save_checkpoint(g.out, {result.model, result.duals, cfg});
      auto log = open_out(log_path.empty() ? g.out + ".csv" : log_path);
      for (std::size_t l = 0; l < result.logs.size(); ++l) result.logs[l].write_csv(log, l == 0);
      out << "wrote checkpoint " << g.out << '\n';
    } else if (eval->parsed()) {
      const Checkpoint ck = load_checkpoint(model_path);
      const auto samples = make_samples(load_dataset(data_path));
      const EvalReport rep = evaluate(ck.model, samples);
      if (!g.out.empty()) {
        auto csv = open_out(g.out + ".csv");
        rep.write_csv(csv);
        auto js = open_out(g.out + ".json");
        js << rep.to_json() << '\n';
      }
      out << std::setprecision(6) << "samples " << rep.rows.size() << " feasible_fraction " << rep.w2
          << " mean_wsr " << rep.mean_wsr << '\n';
    } else if (perm->parsed()) {
      RunConfig cfg = resolve_config(g);
      cfg.sys.num_users = perm_k;
      cfg.sys.num_antennas = perm_nt;
      cfg.sys.weights.clear();
      const auto rep = equivariance_suite(cfg.sys, cfg.geo, g.seed_given ? g.seed : cfg.seed, perm_trials);
      for (const auto& [name, dev] : rep.max_deviation) out << name << ' ' << dev << '\n';
      out << "max_deviation " << rep.overall() << '\n';
      return rep.overall() < 1e-9 ? 0 : 2;
    } else if (cost->parsed()) {
      std::ostringstream table;
      table << "K,Nt,L,usrmnet_flops,hebf_flops,w3_percent\n";
      for (std::size_t k : cost_k) {
        CostConfig c = CostConfig::standard(k, cost_nt, cost_l);
        c.baseline_updates = cost_updates;
        table << k << ',' << cost_nt << ',' << cost_l << ',' << std::fixed << std::setprecision(0)
              << usrmnet_flops(c) << ',' << std::scientific << std::setprecision(2) << hebf_flops(c) << ','
              << std::fixed << std::setprecision(2) << ratio_w3(c) << '\n';
        table << std::defaultfloat;
      }
      out << table.str();
      if (!g.out.empty()) open_out(g.out) << table.str();
    } else if (oracle->parsed()) {
      const Checkpoint ck = load_checkpoint(model_path);
      const auto samples = make_samples(load_dataset(data_path));
      EvalReport rep = evaluate(ck.model, samples);
      const auto cmp = compare_with_oracle(rep, samples, grid);
      rep.reference = "grid-search oracle (substitute for the convex baseline), grid " + std::to_string(grid);
      if (cmp.compared > 0) rep.w1 = 100.0 * cmp.ratio;
      out << "reference " << rep.reference << '\n'
          << "compared " << cmp.compared << " model_mean " << cmp.model_mean << " oracle_mean " << cmp.oracle_mean
          << " w1_percent " << (rep.w1 ? *rep.w1 : std::numeric_limits<double>::quiet_NaN()) << '\n';
      if (!g.out.empty()) open_out(g.out) << rep.to_json() << '\n';
    }
  } catch (const ContractError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return 2;
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace upgd
