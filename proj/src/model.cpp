#include "graphcf/model.hpp"

#include <cmath>
#include <cstddef>
#include <string>

#include "graphcf/adaptive.hpp"

namespace graphcf {

double scale_value(double z, ScaleKind kind) {
  switch (kind) {
    case ScaleKind::Logistic:
      return 1.0 / (1.0 + std::exp(-z));
    case ScaleKind::Clamp:
      return z < 0.0 ? 0.0 : (z > 1.0 ? 1.0 : z);
  }
  throw Error(Status::Internal, "unhandled scale kind");
}

double scale_derivative(double z, double fz, ScaleKind kind) {
  switch (kind) {
    case ScaleKind::Logistic:
      return fz * (1.0 - fz);
    case ScaleKind::Clamp:
      // Flat outside (0, 1); the kinks themselves get the flat value.
      return (z > 0.0 && z < 1.0) ? 1.0 : 0.0;
  }
  throw Error(Status::Internal, "unhandled scale kind");
}

double uniform_norm(NormMode mode, std::size_t width, Id degree,
                    const char* side) {
  if (mode == NormMode::SampledWidth)
    return width == 0 ? 0.0 : 1.0 / std::sqrt(static_cast<double>(width));
  if (degree < 0)
    throw Error(Status::State, std::string("true-degree normalization needs "
                                           "the ") +
                                   side + " degree");
  // Empty true neighborhood: the sum in the formula is empty, so drop the
  // aggregate entirely rather than divide by zero.
  return degree == 0 ? 0.0 : 1.0 / std::sqrt(static_cast<double>(degree));
}

namespace {

// out[d] += c * e[d], slot by slot. Keeping the scale inside the inner product
// makes the weighted path with phi == c reproduce this bit for bit.
void scaled_accumulate(std::span<const Id> row, const EmbeddingTable& table,
                       double c, std::span<double> out) {
  if (c == 0.0) return;
  for (Id entry : row) {
    std::span<const double> e = table.row_for(entry);
    for (std::size_t d = 0; d < out.size(); ++d) out[d] += c * e[d];
  }
}

void check_table(const FeedbackTable& table, Side side, int step,
                 ModelKind kind) {
  if (table.side != side || table.step != step)
    throw Error(Status::InvalidArgument,
                std::string(model_kind_name(kind)) + " expected a step-" +
                    std::to_string(step) + " " + side_name(side) +
                    " feedback table, got step-" + std::to_string(table.step) +
                    " " + side_name(table.side));
}

void check_entity(Id id, Id count, const char* what) {
  if (id < 0 || id >= count)
    throw Error(Status::InvalidArgument,
                std::string(what) + " id " + std::to_string(id) +
                    " out of range [0, " + std::to_string(count) + ")");
}

}  // namespace

void aggregate_uniform(std::span<const Id> row, const EmbeddingTable& table,
                       std::span<double> out) {
  scaled_accumulate(row, table,
                    uniform_norm(NormMode::SampledWidth, row.size(), -1, ""),
                    out);
}

std::vector<double> aggregate_uniform(std::span<const Id> row,
                                      const EmbeddingTable& table) {
  std::vector<double> out(static_cast<std::size_t>(table.dim), 0.0);
  aggregate_uniform(row, table, out);
  return out;
}

RowSet rows_for(const ModelParams& params, ModelKind kind,
                const FeedbackViews& views, Id u, Id i) {
  RowSet rows;
  const bool true_degree = params.spec.norm_mode == NormMode::TrueDegree;
  if (has_user_feedback(kind)) {
    if (views.user_step1 == nullptr)
      throw Error(Status::State, std::string(model_kind_name(kind)) +
                                     " needs a step-one user feedback table");
    check_table(*views.user_step1, Side::User, 1, kind);
    rows.user1 = views.user_step1->row(u);
    if (true_degree && user_agg_mode(kind) == AggMode::Uniform) {
      if (views.user_degrees == nullptr ||
          static_cast<std::size_t>(u) >= views.user_degrees->size())
        throw Error(Status::State,
                    "true-degree normalization needs user degrees");
      rows.user_degree = (*views.user_degrees)[static_cast<std::size_t>(u)];
    }
  }
  if (has_item_feedback(kind)) {
    if (views.item_step1 == nullptr)
      throw Error(Status::State, std::string(model_kind_name(kind)) +
                                     " needs a step-one item feedback table");
    check_table(*views.item_step1, Side::Item, 1, kind);
    rows.item1 = views.item_step1->row(i);
    if (true_degree && item_agg_mode(kind) == AggMode::Uniform) {
      if (views.item_degrees == nullptr ||
          static_cast<std::size_t>(i) >= views.item_degrees->size())
        throw Error(Status::State,
                    "true-degree normalization needs item degrees");
      rows.item_degree = (*views.item_degrees)[static_cast<std::size_t>(i)];
    }
  }
  if (has_step_two(kind)) {
    if (views.user_step2 == nullptr || views.item_step2 == nullptr)
      throw Error(Status::State, std::string(model_kind_name(kind)) +
                                     " needs step-two feedback tables");
    check_table(*views.user_step2, Side::User, 2, kind);
    check_table(*views.item_step2, Side::Item, 2, kind);
    rows.user2 = views.user_step2->row(u);
    rows.item2 = views.item_step2->row(i);
  }
  return rows;
}

double forward_kind(const ModelParams& params, ModelKind kind, Id u, Id i,
                    const RowSet& rows, ForwardCache& cache) {
  const ModelSpec& spec = params.spec;
  check_entity(u, params.n_users, "user");
  check_entity(i, params.n_items, "item");

  cache.u1.active = cache.i1.active = cache.u2.active = cache.i2.active =
      false;

  std::span<const double> pu = params.P.row(u);
  std::span<const double> qi = params.Q.row(i);
  cache.su.assign(pu.begin(), pu.end());
  cache.si.assign(qi.begin(), qi.end());
  std::span<double> su(cache.su);
  std::span<double> si(cache.si);

  switch (user_agg_mode(kind)) {
    case AggMode::None:
      break;
    case AggMode::Uniform:
      scaled_accumulate(rows.user1, params.Y,
                        uniform_norm(spec.norm_mode, rows.user1.size(),
                                     rows.user_degree, "user"),
                        su);
      break;
    case AggMode::Weighted:
      cache.u1.active = true;
      cache.u1.phi.resize(rows.user1.size());
      aggregate_weighted(rows.user1, params.Y, params.alpha.row(u),
                         params.beta, su, cache.u1.phi);
      break;
    case AggMode::Attentive:
      attentive_fill(rows.user1, params.Y, pu, params.attn_user,
                     spec.attention.temperature, spec.mask_pad, cache.u1, su);
      break;
  }
  switch (item_agg_mode(kind)) {
    case AggMode::None:
      break;
    case AggMode::Uniform:
      scaled_accumulate(rows.item1, params.X,
                        uniform_norm(spec.norm_mode, rows.item1.size(),
                                     rows.item_degree, "item"),
                        si);
      break;
    case AggMode::Weighted:
      cache.i1.active = true;
      cache.i1.phi.resize(rows.item1.size());
      aggregate_weighted(rows.item1, params.X, params.beta.row(i),
                         params.alpha, si, cache.i1.phi);
      break;
    case AggMode::Attentive:
      attentive_fill(rows.item1, params.X, qi, params.attn_item,
                     spec.attention.temperature, spec.mask_pad, cache.i1, si);
      break;
  }
  if (has_step_two(kind)) {
    attentive_fill(rows.user2, params.Y2, pu, params.attn_user2,
                   spec.attention.temperature, spec.mask_pad, cache.u2, su);
    attentive_fill(rows.item2, params.X2, qi, params.attn_item2,
                   spec.attention.temperature, spec.mask_pad, cache.i2, si);
  }

  double z = params.b_global + params.b_user[static_cast<std::size_t>(u)] +
             params.b_item[static_cast<std::size_t>(i)];
  for (std::size_t d = 0; d < cache.su.size(); ++d) z += cache.su[d] * cache.si[d];
  cache.z = z;
  cache.rhat = scale_value(z, spec.scale_kind);
  return cache.rhat;
}

double predict(const ModelParams& params, const FeedbackViews& views, Id u,
               Id i) {
  RowSet rows = rows_for(params, params.spec.kind, views, u, i);
  ForwardCache cache;
  return forward_kind(params, params.spec.kind, u, i, rows, cache);
}

double predict_mf(const ModelParams& params, Id u, Id i) {
  ForwardCache cache;
  return forward_kind(params, ModelKind::MF, u, i, RowSet{}, cache);
}

double predict_svdpp(const ModelParams& params, Id u, Id i,
                     std::span<const Id> user_row) {
  RowSet rows;
  rows.user1 = user_row;
  ForwardCache cache;
  return forward_kind(params, ModelKind::SVDPP, u, i, rows, cache);
}

double predict_gcf(const ModelParams& params, Id u, Id i,
                   std::span<const Id> user_row,
                   std::span<const Id> item_row) {
  RowSet rows;
  rows.user1 = user_row;
  rows.item1 = item_row;
  ForwardCache cache;
  return forward_kind(params, ModelKind::GCF, u, i, rows, cache);
}

}  // namespace graphcf
