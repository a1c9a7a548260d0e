#include "graphcf/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "graphcf/adaptive.hpp"
#include "io_util.hpp"

namespace graphcf {

double rmse(std::span<const double> predictions,
            std::span<const double> truths) {
  if (predictions.empty() || predictions.size() != truths.size())
    throw Error(Status::InvalidArgument,
                "rmse needs two nonempty sequences of equal length");
  double sum = 0.0;
  for (std::size_t n = 0; n < predictions.size(); ++n) {
    const double e = predictions[n] - truths[n];
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(predictions.size()));
}

double rmse(const ModelParams& params, const FeedbackViews& views,
            std::span<const RatingRecord> records) {
  if (records.empty())
    throw Error(Status::InvalidArgument, "rmse over an empty record set");
  const ModelKind kind = params.spec.kind;
  ForwardCache cache;
  double sum = 0.0;
  for (const RatingRecord& rec : records) {
    RowSet rows = rows_for(params, kind, views, rec.user, rec.item);
    const double rhat =
        forward_kind(params, kind, rec.user, rec.item, rows, cache);
    const double e = rhat - rec.score;
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(records.size()));
}

std::vector<DegreeSlice> sparse_slice_rmse(const ModelParams& params,
                                           const FeedbackViews& views,
                                           std::span<const RatingRecord> test,
                                           const std::vector<Id>& degrees,
                                           Side side,
                                           std::span<const Id> edges) {
  for (std::size_t b = 0; b < edges.size(); ++b)
    if (edges[b] <= (b == 0 ? -1 : edges[b - 1]))
      throw Error(Status::InvalidArgument,
                  "slice edges must be non-negative and strictly increasing");

  std::vector<DegreeSlice> slices(edges.size() + 1);
  for (std::size_t b = 0; b < slices.size(); ++b) {
    slices[b].lo = b == 0 ? 0 : edges[b - 1];
    slices[b].hi = b < edges.size() ? edges[b] : -1;
  }

  std::vector<double> sq(slices.size(), 0.0);
  const ModelKind kind = params.spec.kind;
  ForwardCache cache;
  for (const RatingRecord& rec : test) {
    const Id entity = side == Side::User ? rec.user : rec.item;
    if (entity < 0 || static_cast<std::size_t>(entity) >= degrees.size())
      throw Error(Status::InvalidArgument,
                  "test record references an entity without a degree");
    const Id degree = degrees[static_cast<std::size_t>(entity)];
    const std::size_t b = static_cast<std::size_t>(
        std::upper_bound(edges.begin(), edges.end(), degree) - edges.begin());
    RowSet rows = rows_for(params, kind, views, rec.user, rec.item);
    const double err =
        forward_kind(params, kind, rec.user, rec.item, rows, cache) -
        rec.score;
    sq[b] += err * err;
    ++slices[b].count;
  }
  for (std::size_t b = 0; b < slices.size(); ++b)
    if (slices[b].count > 0)
      slices[b].rmse = std::sqrt(sq[b] / static_cast<double>(slices[b].count));
  return slices;
}

std::map<int, AttnBucket> attention_by_rating(const ModelParams& params,
                                              const InteractionGraph& g,
                                              const FeedbackTable& table,
                                              Side side) {
  if (table.side != side || table.step != 1)
    throw Error(Status::InvalidArgument,
                "attention-by-rating reads the step-one table of the same side");
  std::map<int, AttnBucket> buckets;
  for (Id entity = 0; entity < table.n_entities; ++entity) {
    std::span<const Id> row = table.row(entity);
    if (std::all_of(row.begin(), row.end(), [](Id v) { return v == kPad; }))
      continue;
    const std::vector<double> attn =
        attention_scores(params, side, 1, entity, row);
    for (std::size_t s = 0; s < row.size(); ++s) {
      if (row[s] == kPad) continue;
      // Only pairs that are true train edges carry a rating to group by;
      // anything else (e.g. step-two style entries) contributes nothing.
      const std::optional<int> raw = g.edge_raw(side, entity, row[s]);
      if (!raw) continue;
      AttnBucket& b = buckets[*raw];
      b.count += 1;
      b.sum += attn[s];
    }
  }
  return buckets;
}

namespace {

constexpr char kCurveHeader[] = "epoch,objective,train_rmse,test_rmse,seconds";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    const std::size_t comma = line.find(',', pos);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(pos));
      break;
    }
    fields.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return fields;
}

}  // namespace

void save_curve(const std::vector<EpochStats>& curve, const std::string& path) {
  auto out = detail::open_out(path);
  out << kCurveHeader << '\n';
  for (const EpochStats& st : curve)
    out << st.epoch << ',' << detail::fmt(st.objective) << ','
        << detail::fmt(st.train_rmse) << ',' << detail::fmt(st.test_rmse)
        << ',' << detail::fmt(st.seconds) << '\n';
  if (!out) throw Error(Status::Io, "write failed: " + path);
}

std::vector<EpochStats> load_curve(const std::string& path) {
  auto in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line) || std::string(detail::trim(line)) != kCurveHeader)
    throw Error(Status::Parse, "not a learning curve: " + path);
  std::vector<EpochStats> curve;
  while (std::getline(in, line)) {
    const std::string_view trimmed = detail::trim(line);
    if (trimmed.empty()) continue;
    const std::vector<std::string> f = split_csv(std::string(trimmed));
    EpochStats st;
    if (f.size() != 5 || !detail::parse_int(f[0], st.epoch) ||
        !detail::parse_double(f[1], st.objective) ||
        !detail::parse_double(f[2], st.train_rmse) ||
        !detail::parse_double(f[3], st.test_rmse) ||
        !detail::parse_double(f[4], st.seconds))
      throw Error(Status::Parse, "bad learning-curve row in " + path);
    curve.push_back(st);
  }
  return curve;
}

void save_curve_comparison(const std::vector<NamedCurve>& curves,
                           const std::string& path) {
  auto out = detail::open_out(path);
  out << "epoch";
  std::size_t max_epochs = 0;
  for (const NamedCurve& c : curves) {
    out << ',' << c.name;
    max_epochs = std::max(max_epochs, c.curve.size());
  }
  out << '\n';
  for (std::size_t e = 0; e < max_epochs; ++e) {
    out << e + 1;  // matches the 1-based epoch column of curve files
    for (const NamedCurve& c : curves) {
      out << ',';
      if (e < c.curve.size()) out << detail::fmt(c.curve[e].test_rmse);
    }
    out << '\n';
  }
  if (!out) throw Error(Status::Io, "write failed: " + path);
}

void save_slices(const std::vector<DegreeSlice>& slices,
                 const std::string& path) {
  auto out = detail::open_out(path);
  out << "degree_lo,degree_hi,count,rmse\n";
  for (const DegreeSlice& s : slices) {
    out << s.lo << ',';
    if (s.hi >= 0) out << s.hi;  // empty cell = unbounded above
    out << ',' << s.count << ',' << detail::fmt(s.rmse) << '\n';
  }
  if (!out) throw Error(Status::Io, "write failed: " + path);
}

std::map<int, AttnBucket> merge_attention(const std::map<int, AttnBucket>& a,
                                          const std::map<int, AttnBucket>& b) {
  std::map<int, AttnBucket> merged = a;
  for (const auto& [raw, bucket] : b) {
    AttnBucket& slot = merged[raw];
    slot.count += bucket.count;
    slot.sum += bucket.sum;
  }
  return merged;
}

namespace {

// 1-based epoch where the curve first stays within epsilon of its final
// value; the final epoch always qualifies, so a hit is guaranteed.
int settle_epoch(const std::vector<EpochStats>& curve, double epsilon) {
  const bool use_test = std::isfinite(curve.back().test_rmse);
  auto value = [&](const EpochStats& st) {
    return use_test ? st.test_rmse : st.train_rmse;
  };
  const double final_value = value(curve.back());
  for (std::size_t n = 0; n < curve.size(); ++n)
    if (std::abs(value(curve[n]) - final_value) <= epsilon)
      return static_cast<int>(n) + 1;
  return static_cast<int>(curve.size());
}

}  // namespace

ConvergenceSummary compare_learning_curves(const std::vector<EpochStats>& a,
                                           const std::vector<EpochStats>& b,
                                           double epsilon) {
  if (a.empty() || b.empty())
    throw Error(Status::InvalidArgument,
                "learning-curve comparison needs two nonempty curves");
  ConvergenceSummary summary;
  summary.epoch_a = settle_epoch(a, epsilon);
  summary.epoch_b = settle_epoch(b, epsilon);
  summary.ratio =
      static_cast<double>(summary.epoch_b) / static_cast<double>(summary.epoch_a);
  return summary;
}

void save_attention_report(const std::map<int, AttnBucket>& user_side,
                           const std::map<int, AttnBucket>& item_side,
                           const std::string& path) {
  auto out = detail::open_out(path);
  out << "side,raw_rating,count,mean_attention\n";
  for (const auto& [raw, bucket] : merge_attention(user_side, item_side))
    out << "both," << raw << ',' << bucket.count << ','
        << detail::fmt(bucket.mean()) << '\n';
  for (const auto& [raw, bucket] : user_side)
    out << "user," << raw << ',' << bucket.count << ','
        << detail::fmt(bucket.mean()) << '\n';
  for (const auto& [raw, bucket] : item_side)
    out << "item," << raw << ',' << bucket.count << ','
        << detail::fmt(bucket.mean()) << '\n';
  if (!out) throw Error(Status::Io, "write failed: " + path);
}

}  // namespace graphcf
