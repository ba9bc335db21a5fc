#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "upgd/fbl.hpp"
#include "upgd/proj.hpp"
#include "upgd/tape.hpp"
#include "upgd/unroll.hpp"

namespace upgd {

struct TrainConfig {
  double lr_theta = 1e-3;  // network taps
  double lr_scale = 1e-3;  // multi-task scales s
  double lr_dual = 1e-4;   // multiplier ascent
  std::size_t batch_size = 20;
  std::size_t epochs = 50;
  std::array<double, 2> init_scale{1.0, 1.0};
  std::uint64_t seed = 0;  // minibatch shuffling

  void validate() const;
};

/// Multipliers for the four coupled constraint families and the scales s.
struct DualState {
  std::vector<double> lambda_h;  // sinr_lo <= sinr
  std::vector<double> lambda_i;  // sinr <= sinr_hi
  std::vector<double> lambda_j;  // V(sinr_hi) <= disp
  std::vector<double> lambda_k;  // sqrt(disp) <= sqrt_disp
  std::array<double, 2> s{1.0, 1.0};

  static DualState initial(std::size_t num_users, std::array<double, 2> s0);
  std::size_t num_users() const { return lambda_h.size(); }
  /// [lambda_h; lambda_i; lambda_j; lambda_k], matching the residual order.
  std::vector<double> stacked() const;
  double lambda_norm() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  std::size_t layer = 0;  // 1-based
  double loss = 0.0;      // mean minibatch loss
  double wsr = 0.0;       // mean objective over the epoch's training forwards
  double vg = 0.0;        // mean coupled violation over the same forwards
  double s1 = 0.0;
  double s2 = 0.0;
  double lambda_norm = 0.0;
  double test_wsr = 0.0;  // NaN without a held-out set
  double test_vg = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> records;

  /// Columns: epoch,layer,loss,wsr,vg,s1,s2,lambda_norm,test_wsr,test_vg
  void write_csv(std::ostream& os, bool header = true) const;
};

/// One problem instance with its constants and starting point.
struct Sample {
  Realization real;
  C1Spec spec;
  OptVector x0;
  Beamformers bf0;
};

/// Builds the sample from a realization via the default initialization.
Sample make_sample(Realization real);

/// exp(-s1/2) L1 + exp(-s2/2) L2 + exp(s1/2) + exp(s2/2).
double multitask_loss(double l1, double l2, std::array<double, 2> s);
/// Same on a tape; `s` is 2 x 1.
Var multitask_loss(Var l1, Var l2, Var s);

/// Training loss over a batch of layer outputs and their hinged residuals:
/// L1 = mean exp(-objective), L2 = mean lambda^T residuals.
Var urllc_loss(std::span<const Var> x_out, std::span<const Var> hinges, const DualState& dual, Var s,
               const SystemParams& sys);
double urllc_loss(std::span<const OptVector> x_out, std::span<const std::vector<double>> hinges,
                  const DualState& dual, const SystemParams& sys);

/// lambda += lr * max(mean_residual, 0) per entry. `mean_raw` is the batch
/// mean of the raw (unhinged) residuals in stacked order.
DualState dual_update(const DualState& dual, std::span<const double> mean_raw, double lr);

/// Starting point of one sample for the layer being trained.
struct LayerInput {
  OptVector x;
  Beamformers bf;
};

struct LayerResult {
  UpgdLayer layer;
  DualState dual;
  TrainLog log;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains one layer (index `layer_index`, 0-based) from cached inputs. The
/// multipliers restart at zero and the scales at cfg.init_scale.
/// NumericError carrying the epoch and batch when the loss turns non-finite.
LayerResult train_layer(UpgdLayer layer, std::size_t layer_index, std::span<const Sample> train,
                        std::span<const LayerInput> train_inputs, std::span<const Sample> test,
                        std::span<const LayerInput> test_inputs, const TrainConfig& cfg,
                        const EpochCallback& on_epoch = {});

struct TrainResult {
  UsrmNet model;
  std::vector<DualState> duals;
  std::vector<TrainLog> logs;
};

/// Layer-by-layer training; each trained layer is frozen and its outputs
/// (with receivers recomputed from the powers) feed the next layer.
TrainResult train_usrmnet(UsrmNet model, std::span<const Sample> train, std::span<const Sample> test,
                          const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace upgd
