#ifndef GRAPHCF_EVALUATE_HPP
#define GRAPHCF_EVALUATE_HPP

#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "graphcf/dataset.hpp"
#include "graphcf/feedback.hpp"
#include "graphcf/graph.hpp"
#include "graphcf/model.hpp"
#include "graphcf/trainer.hpp"

namespace graphcf {

// sqrt(mean((p - t)^2)); lengths must match and be nonzero.
double rmse(std::span<const double> predictions, std::span<const double> truths);

// Root mean squared error over the records, in normalized score units.
double rmse(const ModelParams& params, const FeedbackViews& views,
            std::span<const RatingRecord> records);

struct DegreeSlice {
  Id lo = 0;  // [lo, hi); hi < 0 means unbounded above
  Id hi = 0;
  std::int64_t count = 0;
  double rmse = std::numeric_limits<double>::quiet_NaN();  // NaN when empty
};

// Buckets the test records by the training-graph degree of the record's user
// (side User) or item (side Item). edges = ascending boundaries; {1, 5, 10}
// yields [0,1), [1,5), [5,10), [10,inf). Empty buckets keep a NaN RMSE.
std::vector<DegreeSlice> sparse_slice_rmse(const ModelParams& params,
                                           const FeedbackViews& views,
                                           std::span<const RatingRecord> test,
                                           const std::vector<Id>& degrees,
                                           Side side, std::span<const Id> edges);

struct AttnBucket {
  std::int64_t count = 0;
  double sum = 0.0;

  double mean() const {
    return count == 0 ? std::numeric_limits<double>::quiet_NaN()
                      : sum / static_cast<double>(count);
  }
};

// How step-one attention distributes over the raw rating of the attended
// edge: every entity on `side` contributes its row once, pad slots are
// skipped, and each non-pad slot files the normalized attention score under
// the raw rating of the (entity, slot) training edge.
std::map<int, AttnBucket> attention_by_rating(const ModelParams& params,
                                              const InteractionGraph& g,
                                              const FeedbackTable& table,
                                              Side side);

// Pools the two per-side breakdowns into one rating -> bucket map.
std::map<int, AttnBucket> merge_attention(const std::map<int, AttnBucket>& a,
                                          const std::map<int, AttnBucket>& b);

struct ConvergenceSummary {
  int epoch_a = 0;  // 1-based epoch where the curve first reaches within
  int epoch_b = 0;  // epsilon of its own final test RMSE
  double ratio = 0.0;  // epoch_b / epoch_a
};

// How quickly two learning curves settle. Curves trained without a test
// split (test RMSE all NaN) are scanned on train RMSE instead.
ConvergenceSummary compare_learning_curves(const std::vector<EpochStats>& a,
                                           const std::vector<EpochStats>& b,
                                           double epsilon = 0.0005);

// epoch,objective,train_rmse,test_rmse,seconds per line.
void save_curve(const std::vector<EpochStats>& curve, const std::string& path);
std::vector<EpochStats> load_curve(const std::string& path);

struct NamedCurve {
  std::string name;
  std::vector<EpochStats> curve;
};

// One row per epoch with each model's test RMSE side by side; models missing
// an epoch get an empty cell.
void save_curve_comparison(const std::vector<NamedCurve>& curves,
                           const std::string& path);

void save_slices(const std::vector<DegreeSlice>& slices,
                 const std::string& path);
void save_attention_report(const std::map<int, AttnBucket>& user_side,
                           const std::map<int, AttnBucket>& item_side,
                           const std::string& path);

}  // namespace graphcf

#endif
