#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "support.hpp"
#include "upgd/errors.hpp"
#include "upgd/learn.hpp"

using namespace upgd;

namespace {

std::vector<Sample> samples(std::size_t n, std::size_t k, std::uint64_t seed) {
  SystemParams sys;
  sys.num_users = k;
  sys.max_power = power_from_snr_db(25.0);
  sys = SystemParams::with_uniform_weights(sys);
  std::vector<Sample> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(make_sample(channel_gen(seed + i, sys, Geometry{})));
  return out;
}

std::vector<LayerInput> inputs_of(const std::vector<Sample>& s) {
  std::vector<LayerInput> out;
  for (const auto& x : s) out.push_back({x.x0, x.bf0});
  return out;
}

TrainConfig small_config(std::size_t epochs = 3) {
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.epochs = epochs;
  cfg.seed = 9;
  return cfg;
}

bool same_taps(const UpgdLayer& a, const UpgdLayer& b) {
  const HwgcnNet* na[] = {&a.eta_net, &a.perturb_net};
  const HwgcnNet* nb[] = {&b.eta_net, &b.perturb_net};
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t l = 0; l < na[n]->layers.size(); ++l)
      if (na[n]->layers[l].taps != nb[n]->layers[l].taps) return false;
  return true;
}

}  // namespace

TEST_SUITE("learn") {

TEST_CASE("multitask loss examples") {
  CHECK(multitask_loss(3.0, 5.0, {0.0, 0.0}) == doctest::Approx(10.0));
  const double e = std::exp(1.0);
  CHECK(multitask_loss(1.0, 0.0, {2.0, 0.0}) == doctest::Approx(1.0 / e + e + 1.0));
  Tape tape;
  const Var v = multitask_loss(tape.constant(Tensor::scalar(3.0)), tape.constant(Tensor::scalar(5.0)),
                               tape.constant(Tensor::column({0.4, -0.7})));
  CHECK(v.value().item() == doctest::Approx(multitask_loss(3.0, 5.0, {0.4, -0.7})).epsilon(1e-15));
  CHECK_THROWS_AS(multitask_loss(tape.constant(Tensor::scalar(1.0)), tape.constant(Tensor::scalar(1.0)),
                                 tape.constant(Tensor::column({1.0, 2.0, 3.0}))),
                  ContractError);
}

TEST_CASE("optimal scale equals the log of the task loss") {
  for (double l : {0.2, 1.0, 3.7, 40.0}) {
    // Golden-section search over s for the term exp(-s/2) L + exp(s/2).
    double lo = -20.0;
    double hi = 20.0;
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    auto f = [l](double s) { return std::exp(-0.5 * s) * l + std::exp(0.5 * s); };
    for (int it = 0; it < 200; ++it) {
      const double a = hi - r * (hi - lo);
      const double b = lo + r * (hi - lo);
      if (f(a) < f(b)) {
        hi = b;
      } else {
        lo = a;
      }
    }
    CHECK(0.5 * (lo + hi) == doctest::Approx(std::log(l)).epsilon(1e-6));
  }
}

TEST_CASE("scale gradient matches differences") {
  auto f = [](Var s) {
    Tape& t = *s.tape;
    return multitask_loss(t.constant(Tensor::scalar(2.5)), t.constant(Tensor::scalar(0.8)), s);
  };
  CHECK(upgd::testing::gradient_error(f, Tensor::column({0.3, -1.1})) < 1e-7);
}

TEST_CASE("training loss examples") {
  SystemParams sys;
  sys.num_users = 1;
  sys = SystemParams::with_uniform_weights(sys);
  const double vt = sys.vartheta();
  DualState dual = DualState::initial(1, {0.0, 0.0});
  dual.lambda_h = {1.0};
  dual.lambda_i = {2.0};
  dual.lambda_j = {3.0};
  dual.lambda_k = {4.0};
  const OptVector x(1, {1.0, std::exp(1.0) - 1.0, 2.0, 0.5, 0.5});
  const std::vector<double> hinge{0.1, 0.0, 0.2, 0.0};
  const OptVector xs[] = {x};
  const std::vector<double> hs[] = {hinge};
  const double l1 = std::exp(-(1.0 - vt * 0.5));
  const double l2 = 0.1 + 0.6;
  CHECK(urllc_loss(xs, hs, dual, sys) == doctest::Approx(l1 + l2 + 2.0).epsilon(1e-14));

  Tape tape;
  const Var xo[] = {tape.constant(x.as_column())};
  const Var ho[] = {tape.constant(Tensor::column(hinge))};
  const Var s = tape.constant(Tensor::column({0.0, 0.0}));
  CHECK(urllc_loss(xo, ho, dual, s, sys).value().item() == doctest::Approx(l1 + l2 + 2.0).epsilon(1e-14));

  // A batch averages both tasks.
  const OptVector xs2[] = {x, x};
  const std::vector<double> hs2[] = {hinge, std::vector<double>(4, 0.0)};
  CHECK(urllc_loss(xs2, hs2, dual, sys) == doctest::Approx(l1 + 0.5 * l2 + 2.0).epsilon(1e-14));
  CHECK_THROWS_AS(urllc_loss(std::span<const OptVector>{}, std::span<const std::vector<double>>{}, dual, sys),
                  ContractError);
}

TEST_CASE("dual ascent examples") {
  DualState d = DualState::initial(2, {1.0, 1.0});
  const std::vector<double> raw{0.5, -1.0, 0.0, 2.0, -0.1, 0.1, 3.0, -3.0};
  const DualState e = dual_update(d, raw, 0.1);
  CHECK(e.lambda_h == std::vector<double>{0.05, 0.0});
  CHECK(e.lambda_i[0] == 0.0);
  CHECK(e.lambda_i[1] == doctest::Approx(0.2));
  CHECK(e.lambda_j[0] == 0.0);
  CHECK(e.lambda_j[1] == doctest::Approx(0.01));
  CHECK(e.lambda_k[0] == doctest::Approx(0.3));
  CHECK(e.lambda_k[1] == 0.0);
  CHECK(e.s == d.s);
  CHECK(dual_update(e, raw, 0.0).stacked() == e.stacked());
  CHECK(e.lambda_norm() == doctest::Approx(std::sqrt(0.05 * 0.05 + 0.04 + 0.0001 + 0.09)));
  CHECK_THROWS_AS(dual_update(d, std::vector<double>(3, 0.0), 0.1), ContractError);
}

TEST_CASE("config validation") {
  TrainConfig cfg;
  cfg.lr_theta = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ContractError);
  cfg = TrainConfig{};
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ContractError);
}

TEST_CASE("zero learning rates leave every parameter unchanged") {
  const auto tr = samples(8, 2, 10);
  std::mt19937_64 rng(51);
  const UpgdLayer layer = UpgdLayer::make_default(2, 1, rng);
  TrainConfig cfg = small_config();
  cfg.lr_theta = 0.0;
  cfg.lr_scale = 0.0;
  cfg.lr_dual = 0.0;
  const auto in = inputs_of(tr);
  const auto r = train_layer(layer, 0, tr, in, {}, {}, cfg);
  CHECK(same_taps(r.layer, layer));
  CHECK(r.dual.s == cfg.init_scale);
  CHECK(r.dual.lambda_norm() == 0.0);
}

TEST_CASE("no dual step keeps the multipliers at zero") {
  const auto tr = samples(8, 2, 20);
  TrainConfig cfg = small_config();
  cfg.lr_dual = 0.0;
  const auto r = train_usrmnet(UsrmNet::make_default(2, 2, 1, 3), tr, {}, cfg);
  for (const auto& d : r.duals) CHECK(d.lambda_norm() == 0.0);
}

TEST_CASE("small fixture trains end to end") {
  const auto tr = samples(8, 2, 30);
  const auto te = samples(4, 2, 900);
  std::vector<EpochRecord> seen;
  const auto r = train_usrmnet(UsrmNet::make_default(2, 2, 1, 4), tr, te, small_config(5),
                               [&](const EpochRecord& rec) { seen.push_back(rec); });
  REQUIRE(r.logs.size() == 2);
  CHECK(seen.size() == 10);
  for (const auto& log : r.logs) {
    REQUIRE(log.records.size() == 5);
    for (const auto& rec : log.records) {
      CHECK(std::isfinite(rec.loss));
      CHECK(rec.loss > 0.0);
      CHECK(std::isfinite(rec.test_wsr));
      CHECK(rec.vg >= 0.0);
      CHECK(rec.lambda_norm >= 0.0);
    }
  }
  CHECK(seen.front().layer == 1);
  CHECK(seen.back().layer == 2);
  CHECK(seen.back().epoch == 5);
  std::ostringstream csv;
  r.logs[0].write_csv(csv);
  const std::string text = csv.str();
  CHECK(text.rfind("epoch,layer,loss,wsr,vg,s1,s2,lambda_norm,test_wsr,test_vg\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 6);
}

TEST_CASE("training is deterministic for a fixed seed") {
  const auto tr = samples(8, 2, 40);
  const auto a = train_usrmnet(UsrmNet::make_default(2, 2, 1, 5), tr, {}, small_config());
  const auto b = train_usrmnet(UsrmNet::make_default(2, 2, 1, 5), tr, {}, small_config());
  for (std::size_t l = 0; l < 2; ++l) {
    CHECK(same_taps(a.model.layers[l], b.model.layers[l]));
    CHECK(a.duals[l].stacked() == b.duals[l].stacked());
    CHECK(a.duals[l].s == b.duals[l].s);
  }
  TrainConfig other = small_config();
  other.seed = 10;
  const auto c = train_usrmnet(UsrmNet::make_default(2, 2, 1, 5), tr, {}, other);
  CHECK_FALSE(same_taps(a.model.layers[0], c.model.layers[0]));
}

TEST_CASE("layer-wise training freezes earlier layers and feeds cached outputs forward") {
  const auto tr = samples(8, 2, 50);
  const UsrmNet init = UsrmNet::make_default(2, 2, 1, 6);
  const TrainConfig cfg = small_config();
  const auto full = train_usrmnet(init, tr, {}, cfg);

  // Layer 1 alone gives the same result as inside the stack.
  const auto in0 = inputs_of(tr);
  const auto first = train_layer(init.layers[0], 0, tr, in0, {}, {}, cfg);
  CHECK(same_taps(first.layer, full.model.layers[0]));
  UsrmNet one;
  one.layers = {init.layers[0]};
  const auto single = train_usrmnet(one, tr, {}, cfg);
  CHECK(same_taps(single.model.layers[0], first.layer));

  // Layer 2 was trained on the prefix outputs of the frozen layer 1.
  std::vector<LayerInput> in1;
  for (const auto& s : tr) {
    const auto p = usrmnet_prefix_forward(full.model, 1, s.x0, s.bf0, s.real, s.spec);
    in1.push_back({p.x, p.bf});
  }
  const auto second = train_layer(init.layers[1], 1, tr, in1, {}, {}, cfg);
  CHECK(same_taps(second.layer, full.model.layers[1]));
  CHECK(second.dual.stacked() == full.duals[1].stacked());
}

TEST_CASE("training input validation") {
  const auto tr = samples(4, 2, 60);
  const auto in = inputs_of(tr);
  std::mt19937_64 rng(52);
  const UpgdLayer layer = UpgdLayer::make_default(2, 1, rng);
  CHECK_THROWS_AS(train_layer(layer, 0, {}, {}, {}, {}, small_config()), ContractError);
  CHECK_THROWS_AS(train_layer(layer, 0, tr, std::span(in).first(2), {}, {}, small_config()), ContractError);
  CHECK_THROWS_AS(train_usrmnet(UsrmNet::make_default(3, 1, 1, 1), tr, {}, small_config()), ContractError);
}

TEST_CASE("diverging training reports where it failed") {
  const auto tr = samples(4, 2, 70);
  TrainConfig cfg = small_config(2);
  cfg.init_scale = {-2000.0, 0.0};
  try {
    train_usrmnet(UsrmNet::make_default(2, 1, 1, 1), tr, {}, cfg);
    FAIL("expected a numeric error");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("layer 1 epoch 1 batch 1") != std::string::npos);
  }
}

}  // TEST_SUITE
