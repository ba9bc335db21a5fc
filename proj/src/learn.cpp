#include "upgd/learn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include "upgd/adam.hpp"
#include "upgd/errors.hpp"

namespace upgd {

void TrainConfig::validate() const {
  if (!(lr_theta >= 0.0) || !(lr_scale >= 0.0) || !(lr_dual >= 0.0)) {
    throw ContractError("learning rates must be non-negative");
  }
  if (batch_size < 1) throw ContractError("batch size must be >= 1");
  if (!std::isfinite(init_scale[0]) || !std::isfinite(init_scale[1])) {
    throw ContractError("initial scales must be finite");
  }
}

DualState DualState::initial(std::size_t num_users, std::array<double, 2> s0) {
  DualState d;
  d.lambda_h.assign(num_users, 0.0);
  d.lambda_i.assign(num_users, 0.0);
  d.lambda_j.assign(num_users, 0.0);
  d.lambda_k.assign(num_users, 0.0);
  d.s = s0;
  return d;
}

std::vector<double> DualState::stacked() const {
  std::vector<double> out;
  out.reserve(4 * num_users());
  for (const auto* v : {&lambda_h, &lambda_i, &lambda_j, &lambda_k}) out.insert(out.end(), v->begin(), v->end());
  return out;
}

double DualState::lambda_norm() const {
  double s = 0.0;
  for (double v : stacked()) s += v * v;
  return std::sqrt(s);
}

void TrainLog::write_csv(std::ostream& os, bool header) const {
  if (header) os << "epoch,layer,loss,wsr,vg,s1,s2,lambda_norm,test_wsr,test_vg\n";
  const auto old = os.precision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : records) {
    os << r.epoch << ',' << r.layer << ',' << r.loss << ',' << r.wsr << ',' << r.vg << ',' << r.s1 << ','
       << r.s2 << ',' << r.lambda_norm << ',' << r.test_wsr << ',' << r.test_vg << '\n';
  }
  os.precision(old);
}

Sample make_sample(Realization real) {
  Sample s;
  s.real = std::move(real);
  s.spec = C1Spec::build(s.real);
  auto init = init_x0_w0(s.real, s.spec);
  s.x0 = std::move(init.x0);
  s.bf0 = std::move(init.bf0);
  return s;
}

double multitask_loss(double l1, double l2, std::array<double, 2> s) {
  return std::exp(-0.5 * s[0]) * l1 + std::exp(-0.5 * s[1]) * l2 + std::exp(0.5 * s[0]) +
         std::exp(0.5 * s[1]);
}

Var multitask_loss(Var l1, Var l2, Var s) {
  if (s.rows() * s.cols() != 2) throw ContractError("multitask_loss: s must have two entries");
  Var s1 = entry(s, 0);
  Var s2 = entry(s, 1);
  return exp(-0.5 * s1) * l1 + exp(-0.5 * s2) * l2 + exp(0.5 * s1) + exp(0.5 * s2);
}

namespace {

std::vector<std::size_t> block_rows(Block b, std::size_t k_users) {
  std::vector<std::size_t> idx(k_users);
  for (std::size_t k = 0; k < k_users; ++k) idx[k] = static_cast<std::size_t>(b) * k_users + k;
  return idx;
}

double objective(const OptVector& x, const SystemParams& sys) { return wsr(x, sys); }

}  // namespace

Var urllc_loss(std::span<const Var> x_out, std::span<const Var> hinges, const DualState& dual, Var s,
               const SystemParams& sys) {
  if (x_out.empty() || x_out.size() != hinges.size()) {
    throw ContractError("urllc_loss: need one residual column per output");
  }
  const std::size_t k_users = dual.num_users();
  if (sys.weights.size() != k_users) throw ContractError("urllc_loss: weight count differs from K");
  Tape& tape = *s.tape;
  const Tensor alpha = Tensor::column(sys.weights);
  const Tensor lambda = Tensor::column(dual.stacked());
  const double vt = sys.vartheta();
  std::optional<Var> l1_sum;
  std::optional<Var> l2_sum;
  for (std::size_t i = 0; i < x_out.size(); ++i) {
    if (hinges[i].rows() != 4 * k_users) throw ContractError("urllc_loss: residual length must be 4K");
    Var phi = gather(x_out[i], block_rows(Block::kSinrLower, k_users), k_users, 1);
    Var t = gather(x_out[i], block_rows(Block::kSqrtDisp, k_users), k_users, 1);
    Var obj = sum(tape.constant(alpha) * (log(phi + 1.0) - vt * t));
    Var e = exp(-obj);
    Var pen = sum(tape.constant(lambda) * hinges[i]);
    l1_sum = l1_sum ? *l1_sum + e : e;
    l2_sum = l2_sum ? *l2_sum + pen : pen;
  }
  const double inv_b = 1.0 / static_cast<double>(x_out.size());
  return multitask_loss(inv_b * *l1_sum, inv_b * *l2_sum, s);
}

double urllc_loss(std::span<const OptVector> x_out, std::span<const std::vector<double>> hinges,
                  const DualState& dual, const SystemParams& sys) {
  if (x_out.empty() || x_out.size() != hinges.size()) {
    throw ContractError("urllc_loss: need one residual vector per output");
  }
  const auto lambda = dual.stacked();
  double l1 = 0.0;
  double l2 = 0.0;
  for (std::size_t i = 0; i < x_out.size(); ++i) {
    if (hinges[i].size() != lambda.size()) throw ContractError("urllc_loss: residual length must be 4K");
    l1 += std::exp(-objective(x_out[i], sys));
    for (std::size_t j = 0; j < lambda.size(); ++j) l2 += lambda[j] * hinges[i][j];
  }
  const double n = static_cast<double>(x_out.size());
  return multitask_loss(l1 / n, l2 / n, dual.s);
}

DualState dual_update(const DualState& dual, std::span<const double> mean_raw, double lr) {
  const std::size_t k_users = dual.num_users();
  if (mean_raw.size() != 4 * k_users) throw ContractError("dual_update: expected 4K residual means");
  DualState out = dual;
  std::vector<double>* groups[] = {&out.lambda_h, &out.lambda_i, &out.lambda_j, &out.lambda_k};
  for (std::size_t g = 0; g < 4; ++g) {
    for (std::size_t k = 0; k < k_users; ++k) (*groups[g])[k] += lr * std::max(mean_raw[g * k_users + k], 0.0);
  }
  return out;
}

namespace {

std::vector<Tensor*> tap_pointers(UpgdLayer& layer) {
  std::vector<Tensor*> out;
  for (auto* net : {&layer.eta_net, &layer.perturb_net})
    for (auto& gl : net->layers)
      for (auto& t : gl.taps) out.push_back(&t);
  return out;
}

std::vector<Var> tap_vars(const BoundNet& a, const BoundNet& b) {
  std::vector<Var> out;
  for (const auto* bn : {&a, &b})
    for (const auto& layer : bn->taps) out.insert(out.end(), layer.begin(), layer.end());
  return out;
}

struct HeldOut {
  double wsr = std::numeric_limits<double>::quiet_NaN();
  double vg = std::numeric_limits<double>::quiet_NaN();
};

// Same conventions as evaluation: receivers refreshed from the output powers.
HeldOut held_out_metrics(const UpgdLayer& layer, std::span<const Sample> test,
                         std::span<const LayerInput> inputs) {
  HeldOut h;
  if (test.empty()) return h;
  double wsr_sum = 0.0;
  double vg_sum = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto& smp = test[i];
    const OptVector x = layer_forward(layer, inputs[i].x, smp.real, inputs[i].bf, smp.spec);
    const C2Evaluator ev(smp.real, mmse_beamformer(x.block(Block::kPower), smp.real));
    wsr_sum += wsr(x, smp.real.sys);
    vg_sum += violation_c2(x, ev).mean;
  }
  h.wsr = wsr_sum / static_cast<double>(test.size());
  h.vg = vg_sum / static_cast<double>(test.size());
  return h;
}

}  // namespace

LayerResult train_layer(UpgdLayer layer, std::size_t layer_index, std::span<const Sample> train,
                        std::span<const LayerInput> train_inputs, std::span<const Sample> test,
                        std::span<const LayerInput> test_inputs, const TrainConfig& cfg,
                        const EpochCallback& on_epoch) {
  cfg.validate();
  if (train.empty()) throw ContractError("train_layer: empty training set");
  if (train.size() != train_inputs.size() || test.size() != test_inputs.size()) {
    throw ContractError("train_layer: inputs must match samples one to one");
  }
  const std::size_t k_users = train.front().real.num_users();
  layer.validate(k_users);
  const SystemParams& sys = train.front().real.sys;

  LayerResult res;
  res.dual = DualState::initial(k_users, cfg.init_scale);
  AdamState theta_state;
  AdamState scale_state;
  std::mt19937_64 rng(cfg.seed + 0x9e3779b97f4a7c15ULL * (layer_index + 1));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  const auto taps = tap_pointers(layer);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    double wsr_sum = 0.0;
    double vg_sum = 0.0;
    std::size_t batches = 0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batches) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      Tape tape;
      const BoundNet eta = bind(layer.eta_net, tape, true);
      const BoundNet perturb = bind(layer.perturb_net, tape, true);
      Var s = tape.leaf(Tensor::column({res.dual.s[0], res.dual.s[1]}));
      std::vector<Var> outs;
      std::vector<Var> hinges;
      std::vector<double> raw_mean(4 * k_users, 0.0);
      for (std::size_t b = start; b < stop; ++b) {
        const Sample& smp = train[order[b]];
        const LayerInput& in = train_inputs[order[b]];
        const Tensor a = adjacency(smp.real.H, in.bf);
        const auto tr = layer_forward(eta, perturb, tape.constant(in.x.as_column()), in.x, a, sys, smp.spec);
        const C2Evaluator ev(smp.real, in.bf);
        hinges.push_back(ev.hinge_residuals(tr.x_out));
        outs.push_back(tr.x_out);
        const OptVector xv = OptVector::from_column(tr.x_out.value());
        const auto raw = ev.raw_residuals(xv);
        double hinge_total = 0.0;
        for (std::size_t j = 0; j < raw.size(); ++j) {
          raw_mean[j] += raw[j];
          hinge_total += std::max(raw[j], 0.0);
        }
        wsr_sum += wsr(xv, sys);
        vg_sum += hinge_total / static_cast<double>(raw.size());
        ++seen;
      }
      const double n = static_cast<double>(stop - start);
      for (double& v : raw_mean) v /= n;

      Var loss = urllc_loss(outs, hinges, res.dual, s, sys);
      const double loss_value = loss.value().item();
      const std::string where = "layer " + std::to_string(layer_index + 1) + " epoch " + std::to_string(epoch) +
                                " batch " + std::to_string(batches + 1);
      if (!std::isfinite(loss_value)) throw NumericError("non-finite training loss at " + where);
      if (!(loss_value > 0.0)) throw NumericError("non-positive training loss at " + where);
      Gradients grads;
      try {
        grads = tape.backward(loss);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at " + where, e.node());
      }

      std::vector<Tensor> params;
      std::vector<Tensor> g;
      const auto vars = tap_vars(eta, perturb);
      params.reserve(taps.size());
      for (std::size_t i = 0; i < taps.size(); ++i) {
        params.push_back(*taps[i]);
        g.push_back(grads[vars[i]]);
      }
      adam_step(params, g, theta_state, cfg.lr_theta);
      for (std::size_t i = 0; i < taps.size(); ++i) *taps[i] = std::move(params[i]);

      std::vector<Tensor> sp{Tensor::column({res.dual.s[0], res.dual.s[1]})};
      adam_step(sp, {grads[s]}, scale_state, cfg.lr_scale);
      const std::array<double, 2> new_s{sp[0][0], sp[0][1]};

      res.dual = dual_update(res.dual, raw_mean, cfg.lr_dual);
      res.dual.s = new_s;
      loss_sum += loss_value;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.layer = layer_index + 1;
    rec.loss = loss_sum / static_cast<double>(batches);
    rec.wsr = wsr_sum / static_cast<double>(seen);
    rec.vg = vg_sum / static_cast<double>(seen);
    rec.s1 = res.dual.s[0];
    rec.s2 = res.dual.s[1];
    rec.lambda_norm = res.dual.lambda_norm();
    const HeldOut h = held_out_metrics(layer, test, test_inputs);
    rec.test_wsr = h.wsr;
    rec.test_vg = h.vg;
    res.log.records.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  res.layer = std::move(layer);
  return res;
}

namespace {
std::vector<LayerInput> initial_inputs(std::span<const Sample> samples) {
  std::vector<LayerInput> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back({s.x0, s.bf0});
  return out;
}

void advance(const UpgdLayer& layer, std::span<const Sample> samples, std::vector<LayerInput>& inputs) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    inputs[i].x = layer_forward(layer, inputs[i].x, samples[i].real, inputs[i].bf, samples[i].spec);
    inputs[i].bf = mmse_beamformer(inputs[i].x.block(Block::kPower), samples[i].real);
  }
}
}  // namespace

TrainResult train_usrmnet(UsrmNet model, std::span<const Sample> train, std::span<const Sample> test,
                          const TrainConfig& cfg, const EpochCallback& on_epoch) {
  if (train.empty()) throw ContractError("train_usrmnet: empty training set");
  model.validate(train.front().real.num_users());
  auto train_in = initial_inputs(train);
  auto test_in = initial_inputs(test);
  TrainResult out;
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    auto r = train_layer(model.layers[l], l, train, train_in, test, test_in, cfg, on_epoch);
    model.layers[l] = std::move(r.layer);
    out.duals.push_back(std::move(r.dual));
    out.logs.push_back(std::move(r.log));
    if (l + 1 < model.num_layers()) {
      advance(model.layers[l], train, train_in);
      advance(model.layers[l], test, test_in);
    }
  }
  out.model = std::move(model);
  return out;
}

}  // namespace upgd
