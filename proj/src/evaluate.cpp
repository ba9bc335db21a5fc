#include "upgd/evaluate.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "upgd/errors.hpp"

namespace upgd {

namespace {

struct GridSearch {
  const Realization& real;
  double vt;
  OracleResult best;

  void consider(const std::vector<double>& q) {
    ++best.evaluated;
    double total = 0.0;
    for (double v : q) total += v;
    if (total <= 0.0) return;
    Beamformers bf = mmse_beamformer(q, real);
    const auto gam = sinr(q, bf, real);
    for (double g : gam) {
      if (!(fbl_rate(g, vt) >= real.sys.rate_target())) return;
    }
    const double w = weighted_rate(gam, real.sys);
    if (!best.feasible || w > best.wsr) {
      best.feasible = true;
      best.wsr = w;
      best.q = q;
      best.bf = std::move(bf);
    }
  }
};

// Visits all q with q_k = lo_k + step * i_k, 0 <= q_k, sum q <= cap.
void enumerate(std::size_t k, std::vector<double>& q, const std::vector<double>& lo, double step,
               std::size_t steps, double cap, const std::function<void(const std::vector<double>&)>& visit) {
  if (k == q.size()) {
    visit(q);
    return;
  }
  double used = 0.0;
  for (std::size_t j = 0; j < k; ++j) used += q[j];
  for (std::size_t i = 0; i <= steps; ++i) {
    const double v = lo[k] + step * static_cast<double>(i);
    if (v < 0.0) continue;
    if (used + v > cap * (1.0 + 1e-12)) break;
    q[k] = v;
    enumerate(k + 1, q, lo, step, steps, cap, visit);
  }
}

}  // namespace

OracleResult oracle_wsr(const Realization& real, std::size_t grid) {
  const std::size_t k_users = real.num_users();
  if (k_users > 3) throw ContractError("oracle_wsr: exhaustive grid limited to K <= 3");
  if (grid < 1) throw ContractError("oracle_wsr: grid resolution must be >= 1");
  real.sys.validate();
  const double p = real.sys.max_power;
  GridSearch search{real, real.sys.vartheta(), {}};
  auto visit = [&](const std::vector<double>& q) { search.consider(q); };

  std::vector<double> q(k_users, 0.0);
  const double coarse = p / static_cast<double>(grid);
  enumerate(0, q, std::vector<double>(k_users, 0.0), coarse, grid, p, visit);
  if (!search.best.feasible) return search.best;

  const std::vector<double> centre = search.best.q;
  std::vector<double> lo(k_users);
  for (std::size_t k = 0; k < k_users; ++k) lo[k] = centre[k] - coarse;
  enumerate(0, q, lo, coarse / 10.0, 20, p, visit);
  return search.best;
}

EvalRow evaluate_point(const OptVector& x, const Beamformers& bf, const Realization& real) {
  EvalRow row;
  const C2Evaluator ev(real, bf);
  row.wsr = wsr(x, real.sys);
  row.vg = violation_c2(x, ev).mean;
  row.feasible = row.vg == 0.0;
  const auto gam = ev.sinr(x.block(Block::kPower));
  row.rate = weighted_rate(gam, real.sys);
  return row;
}

EvalReport summarize(std::vector<EvalRow> rows) {
  EvalReport rep;
  rep.rows = std::move(rows);
  double total = 0.0;
  for (const auto& r : rep.rows) {
    if (r.feasible) {
      ++rep.num_feasible;
      total += r.wsr;
    }
  }
  rep.mean_wsr = rep.num_feasible ? total / static_cast<double>(rep.num_feasible)
                                  : std::numeric_limits<double>::quiet_NaN();
  rep.w2 = rep.rows.empty() ? 0.0 : static_cast<double>(rep.num_feasible) / static_cast<double>(rep.rows.size());
  return rep;
}

EvalReport evaluate(const UsrmNet& model, std::span<const Sample> samples) {
  std::vector<EvalRow> rows;
  rows.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const auto out = usrmnet_forward(model, s.x0, s.bf0, s.real, s.spec);
    EvalRow row = evaluate_point(out.x, out.bf, s.real);
    row.index = i;
    row.layer_wsr = out.wsr_trace;
    rows.push_back(std::move(row));
  }
  return summarize(std::move(rows));
}

void EvalReport::write_csv(std::ostream& os) const {
  const auto old = os.precision(std::numeric_limits<double>::max_digits10);
  os << "index,wsr,rate,vg,feasible\n";
  for (const auto& r : rows) {
    os << r.index << ',' << r.wsr << ',' << r.rate << ',' << r.vg << ',' << (r.feasible ? 1 : 0) << '\n';
  }
  os.precision(old);
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["schema_version"] = kReportSchemaVersion;
  j["num_samples"] = rows.size();
  j["num_feasible"] = num_feasible;
  j["mean_wsr"] = std::isfinite(mean_wsr) ? nlohmann::json(mean_wsr) : nlohmann::json(nullptr);
  j["w2"] = w2;
  j["w1"] = w1 ? nlohmann::json(*w1) : nlohmann::json(nullptr);
  j["reference"] = reference;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows) {
    j["rows"].push_back({{"index", r.index},
                         {"wsr", r.wsr},
                         {"rate", r.rate},
                         {"vg", r.vg},
                         {"feasible", r.feasible},
                         {"layer_wsr", r.layer_wsr}});
  }
  return j.dump(1);
}

OracleComparison compare_with_oracle(const EvalReport& report, std::span<const Sample> samples,
                                     std::size_t grid) {
  if (report.rows.size() != samples.size()) throw ContractError("compare_with_oracle: row count mismatch");
  OracleComparison c;
  double model_total = 0.0;
  double oracle_total = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!report.rows[i].feasible) continue;
    const auto o = oracle_wsr(samples[i].real, grid);
    if (!o.feasible) continue;
    ++c.compared;
    model_total += report.rows[i].wsr;
    oracle_total += o.wsr;
  }
  if (c.compared > 0) {
    c.model_mean = model_total / static_cast<double>(c.compared);
    c.oracle_mean = oracle_total / static_cast<double>(c.compared);
    c.ratio = c.model_mean / c.oracle_mean;
  }
  return c;
}

}  // namespace upgd
