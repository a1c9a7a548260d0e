#ifndef GRAPHCF_MODEL_HPP
#define GRAPHCF_MODEL_HPP

#include <span>
#include <vector>

#include "graphcf/feedback.hpp"
#include "graphcf/params.hpp"
#include "graphcf/types.hpp"

namespace graphcf {

// Bounding scale function f. Logistic by default; clamp-to-[0,1] is the
// ablation switch.
double scale_value(double z, ScaleKind kind = ScaleKind::Logistic);
double scale_derivative(double z, double fz, ScaleKind kind);

// k^{-1/2} * sum of embeddings over the row; pads resolve to the pad row.
// Accumulates per slot as c * e_j so the weighted aggregate with phi == c
// reproduces it bit for bit.
void aggregate_uniform(std::span<const Id> row, const EmbeddingTable& table,
                       std::span<double> out);
std::vector<double> aggregate_uniform(std::span<const Id> row,
                                      const EmbeddingTable& table);

// Per-slot scale of a uniform aggregate: width^{-1/2} or degree^{-1/2}.
// Zero-width rows and zero-degree entities scale to 0; a missing degree
// (negative) under NormMode::TrueDegree throws Error(State).
double uniform_norm(NormMode mode, std::size_t width, Id degree,
                    const char* side);

// Feedback tables (and true degrees, for NormMode::TrueDegree) a model kind
// reads at prediction time.
struct FeedbackViews {
  const FeedbackTable* user_step1 = nullptr;
  const FeedbackTable* item_step1 = nullptr;
  const FeedbackTable* user_step2 = nullptr;
  const FeedbackTable* item_step2 = nullptr;
  const std::vector<Id>* user_degrees = nullptr;
  const std::vector<Id>* item_degrees = nullptr;
};

struct RowSet {
  std::span<const Id> user1, item1, user2, item2;
  Id user_degree = -1;
  Id item_degree = -1;
};

// Pulls the rows a kind needs out of the views; throws Error(State) when a
// required table is missing.
RowSet rows_for(const ModelParams& params, ModelKind kind,
                const FeedbackViews& views, Id u, Id i);

// Per-record forward state kept for analysis and backprop. Aggregates land
// directly in ForwardCache::su/si; only per-slot weights live here.
struct SideCache {
  bool active = false;
  std::vector<double> phi;   // k pair weights (weighted mode)
  std::vector<double> raw;   // k raw attention scores a' (attentive mode)
  std::vector<double> attn;  // k normalized attention scores
  std::vector<std::vector<std::vector<double>>> mlp_acts;  // per slot
};

struct ForwardCache {
  SideCache u1, i1, u2, i2;
  std::vector<double> su, si;
  double z = 0.0;
  double rhat = 0.0;
};

// Evaluates the prediction formula of `kind` using the blocks in `params`
// (params.spec.kind does not have to match; reductions rely on that).
double forward_kind(const ModelParams& params, ModelKind kind, Id u, Id i,
                    const RowSet& rows, ForwardCache& cache);

// Dispatch on params.spec.kind.
double predict(const ModelParams& params, const FeedbackViews& views, Id u, Id i);

double predict_mf(const ModelParams& params, Id u, Id i);
double predict_svdpp(const ModelParams& params, Id u, Id i,
                     std::span<const Id> user_row);
double predict_gcf(const ModelParams& params, Id u, Id i,
                   std::span<const Id> user_row, std::span<const Id> item_row);

}  // namespace graphcf

#endif
