#ifndef GRAPHCF_TRAINER_HPP
#define GRAPHCF_TRAINER_HPP

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "graphcf/dataset.hpp"
#include "graphcf/feedback.hpp"
#include "graphcf/model.hpp"
#include "graphcf/params.hpp"

namespace graphcf {

struct TrainConfig {
  ModelSpec model;
  double learning_rate = 0.05;
  int epochs = 30;
  int batch_size = 256;
  double lambda = 0.02;    // L2 on embedding rows a record touches
  double lambda_r = 1e-4;  // L2 on the alpha/beta weight factors
  std::uint64_t seed = 1;
};

struct EpochStats {
  int epoch = 0;
  double objective = 0.0;  // summed squared error + L2 over the epoch's pass
  double train_rmse = 0.0;
  double test_rmse = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochStats> curve;
};

// Sparse gradient block. Rows are zeroed lazily on first touch within a
// batch, so accumulation and the update both cost O(touched rows).
struct GradTable {
  Id rows = 0;
  int dim = 0;
  std::vector<double> data;
  std::vector<std::uint64_t> stamp;
  std::vector<Id> touched;
  std::uint64_t tick = 0;

  void reset_shape(Id rows_, int dim_);
  void next_batch();
  std::span<double> row(Id r);
  // Flat lookup that reads untouched rows as zero.
  double at(std::size_t flat) const;
};

// Attention-network gradients are dense: every record touches every weight.
struct GradMlp {
  std::vector<MlpLayer> layers;

  void reset_shape(const MlpParams& shape);
  void zero();
};

struct Gradients {
  GradTable P, Q, Y, X, Y2, X2, alpha, beta, b_user, b_item;
  double b_global = 0.0;
  GradMlp attn_user, attn_item, attn_user2, attn_item2;

  void reset(const ModelParams& params);
  void next_batch();
};

// Scratch reused across records so the training loop stays allocation-free.
struct Workspace {
  ForwardCache cache;
  std::vector<double> dsu, dsi, dinput, mlp_a, mlp_b;
};

// Squared error plus this record's L2 penalty. The penalty covers the rows
// the forward pass reads: p_u, q_i, every feedback slot (mask_pad removes
// masked pad slots), and under weighted aggregation the alpha/beta factors.
// Biases and attention networks are not regularized.
double record_loss(const ModelParams& params, const RowSet& rows, Id u, Id i,
                   double score, double rhat, const TrainConfig& cfg);

// d(record_loss)/dtheta added into grads; cache must hold the forward state
// of exactly this record (params.spec.kind, same rows).
void accumulate_gradients(const ModelParams& params, const RowSet& rows, Id u,
                          Id i, double score, const ForwardCache& cache,
                          const TrainConfig& cfg, Gradients& grads,
                          Workspace& ws);

// theta -= step * grad over touched rows plus the dense blocks.
void apply_updates(ModelParams& params, const Gradients& grads, double step);

// Backprop dscore through activations cached by mlp_forward_cached;
// accumulates network gradients and adds the input gradient into dinput.
void mlp_backward(const MlpParams& mlp,
                  const std::vector<std::vector<double>>& acts, double dscore,
                  GradMlp& gmlp, std::span<double> dinput, Workspace& ws);

struct BlockCheck {
  std::string block;
  std::size_t checked = 0;
  double max_rel_err = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

struct FiniteDiffReport {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
  // Smallest |pre-activation| (and |z| / |z-1| under the clamp scale) seen in
  // the analytic pass. Central differences are only meaningful when this
  // comfortably exceeds the probe step.
  double min_kink_margin = std::numeric_limits<double>::infinity();
  std::vector<BlockCheck> blocks;
};

// Central-difference check of every allocated coordinate against the batch
// objective sum(record_loss). Relative error uses max(|analytic|, |numeric|,
// 1e-4) as the denominator so coordinates with near-zero gradient compare at
// the scale of finite-difference noise instead of blowing up.
FiniteDiffReport finite_diff_check(const ModelParams& params,
                                   std::span<const RatingRecord> batch,
                                   const FeedbackViews& views,
                                   const TrainConfig& cfg, double eps);

using EpochCallback = std::function<void(const EpochStats&, const ModelParams&)>;

// Mini-batch SGD from a fresh init_params(cfg.model, ..., cfg.seed). Updates
// are scaled by learning_rate / batch length. Throws Error(Numeric) naming
// the epoch and offending block if anything becomes non-finite.
TrainResult train_model(const Dataset& train_ds, const Dataset* test_ds,
                        const FeedbackViews& views, const TrainConfig& cfg,
                        const EpochCallback& on_epoch = {});

}  // namespace graphcf

#endif
