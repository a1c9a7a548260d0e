#include "graphcf/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace graphcf {

double pair_weight(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw Error(Status::InvalidArgument, "pair weight factor width mismatch");
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) s += a[d] * b[d];
  return s;
}

void aggregate_weighted(std::span<const Id> row, const EmbeddingTable& table,
                        std::span<const double> entity_factor,
                        const EmbeddingTable& factor_table,
                        std::span<double> out, std::span<double> phi_out) {
  if (!phi_out.empty() && phi_out.size() != row.size())
    throw Error(Status::InvalidArgument, "phi_out/row length mismatch");
  for (std::size_t s = 0; s < row.size(); ++s) {
    double phi = pair_weight(entity_factor, factor_table.row_for(row[s]));
    if (!phi_out.empty()) phi_out[s] = phi;
    std::span<const double> e = table.row_for(row[s]);
    for (std::size_t d = 0; d < out.size(); ++d) out[d] += phi * e[d];
  }
}

double mlp_forward_cached(const MlpParams& mlp, std::span<const double> input,
                          std::vector<std::vector<double>>& acts) {
  if (mlp.empty()) throw Error(Status::State, "attention network is empty");
  if (static_cast<int>(input.size()) != mlp.input_width())
    throw Error(Status::InvalidArgument,
                "attention input width " + std::to_string(input.size()) +
                    " != network width " + std::to_string(mlp.input_width()));
  // acts[0] is the raw input; acts[l + 1] keeps layer l's PRE-activations
  // (ReLU is applied on read) so backprop can mask on the true sign and a
  // finite-difference caller can measure its distance to the kink.
  acts.resize(mlp.layers.size() + 1);
  acts[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    const MlpLayer& layer = mlp.layers[l];
    const std::vector<double>& in = acts[l];
    std::vector<double>& out = acts[l + 1];
    out.assign(static_cast<std::size_t>(layer.out), 0.0);
    for (int o = 0; o < layer.out; ++o) {
      const double* w = layer.w.data() + static_cast<std::size_t>(o) * layer.in;
      double s = layer.b[static_cast<std::size_t>(o)];
      for (int d = 0; d < layer.in; ++d) {
        const double a = in[static_cast<std::size_t>(d)];
        s += w[d] * (l == 0 ? a : (a > 0.0 ? a : 0.0));
      }
      out[static_cast<std::size_t>(o)] = s;
    }
  }
  return acts.back()[0];
}

double mlp_forward(const MlpParams& mlp, std::span<const double> entity_vec,
                   std::span<const double> fb_vec) {
  std::vector<double> input(entity_vec.size() + fb_vec.size());
  std::copy(entity_vec.begin(), entity_vec.end(), input.begin());
  std::copy(fb_vec.begin(), fb_vec.end(),
            input.begin() + static_cast<std::ptrdiff_t>(entity_vec.size()));
  std::vector<std::vector<double>> acts;
  return mlp_forward_cached(mlp, input, acts);
}

std::vector<double> softmax_temperature(std::span<const double> scores,
                                        double t) {
  if (t <= 0.0)
    throw Error(Status::Config, "softmax temperature must be positive");
  std::vector<double> out(scores.size());
  if (scores.empty()) return out;
  double m = scores[0];
  for (double s : scores) m = std::max(m, s);
  double sum = 0.0;
  for (std::size_t s = 0; s < scores.size(); ++s) {
    out[s] = std::exp((scores[s] - m) / t);
    sum += out[s];
  }
  for (double& v : out) v /= sum;
  return out;
}

void softmax_temperature_masked(std::span<const double> scores, double t,
                                std::span<const char> active,
                                std::span<double> out) {
  if (t <= 0.0)
    throw Error(Status::Config, "softmax temperature must be positive");
  if (scores.size() != active.size() || scores.size() != out.size())
    throw Error(Status::InvalidArgument, "masked softmax length mismatch");
  bool any = false;
  double m = 0.0;
  for (std::size_t s = 0; s < scores.size(); ++s) {
    if (!active[s]) continue;
    m = any ? std::max(m, scores[s]) : scores[s];
    any = true;
  }
  std::fill(out.begin(), out.end(), 0.0);
  if (!any) return;  // nothing to attend to: the aggregate stays empty
  double sum = 0.0;
  for (std::size_t s = 0; s < scores.size(); ++s) {
    if (!active[s]) continue;
    out[s] = std::exp((scores[s] - m) / t);
    sum += out[s];
  }
  for (std::size_t s = 0; s < scores.size(); ++s)
    if (active[s]) out[s] /= sum;
}

void attentive_fill(std::span<const Id> row, const EmbeddingTable& table,
                    std::span<const double> entity_vec, const MlpParams& mlp,
                    double t, bool mask_pad, SideCache& cache,
                    std::span<double> out) {
  const std::size_t k = row.size();
  cache.active = true;
  cache.raw.assign(k, 0.0);
  cache.attn.assign(k, 0.0);
  cache.mlp_acts.resize(k);

  std::vector<double> input(entity_vec.size() +
                            static_cast<std::size_t>(table.dim));
  std::vector<char> live(k, 1);
  for (std::size_t s = 0; s < k; ++s) {
    if (mask_pad && row[s] == kPad) {
      live[s] = 0;
      cache.mlp_acts[s].clear();
      continue;
    }
    std::span<const double> e = table.row_for(row[s]);
    std::copy(entity_vec.begin(), entity_vec.end(), input.begin());
    std::copy(e.begin(), e.end(),
              input.begin() + static_cast<std::ptrdiff_t>(entity_vec.size()));
    cache.raw[s] = mlp_forward_cached(mlp, input, cache.mlp_acts[s]);
  }

  if (mask_pad) {
    softmax_temperature_masked(cache.raw, t, live, cache.attn);
  } else {
    std::vector<double> a = softmax_temperature(cache.raw, t);
    std::copy(a.begin(), a.end(), cache.attn.begin());
  }

  for (std::size_t s = 0; s < k; ++s) {
    if (!live[s]) continue;
    std::span<const double> e = table.row_for(row[s]);
    for (std::size_t d = 0; d < out.size(); ++d)
      out[d] += cache.attn[s] * e[d];
  }
}

std::pair<std::vector<double>, std::vector<double>> aggregate_attentive(
    std::span<const Id> row, const EmbeddingTable& table,
    std::span<const double> entity_vec, const MlpParams& mlp, double t,
    bool mask_pad) {
  std::vector<double> agg(static_cast<std::size_t>(table.dim), 0.0);
  SideCache cache;
  attentive_fill(row, table, entity_vec, mlp, t, mask_pad, cache, agg);
  return {std::move(agg), std::move(cache.attn)};
}

std::vector<double> attention_scores(const ModelParams& params, Side side,
                                     int step, Id entity,
                                     std::span<const Id> row) {
  const EmbeddingTable* entity_table = nullptr;
  const EmbeddingTable* fb_table = nullptr;
  const MlpParams* mlp = nullptr;
  if (side == Side::User) {
    entity_table = &params.P;
    fb_table = step == 1 ? &params.Y : &params.Y2;
    mlp = step == 1 ? &params.attn_user : &params.attn_user2;
  } else {
    entity_table = &params.Q;
    fb_table = step == 1 ? &params.X : &params.X2;
    mlp = step == 1 ? &params.attn_item : &params.attn_item2;
  }
  if (step != 1 && step != 2)
    throw Error(Status::InvalidArgument,
                "attention step must be 1 or 2, got " + std::to_string(step));
  if (mlp->empty())
    throw Error(Status::State,
                std::string("no step-") + std::to_string(step) + " " +
                    side_name(side) + " attention network in this model");
  std::vector<double> agg(static_cast<std::size_t>(fb_table->dim), 0.0);
  SideCache cache;
  attentive_fill(row, *fb_table, entity_table->row(entity), *mlp,
                 params.spec.attention.temperature, params.spec.mask_pad,
                 cache, agg);
  return std::move(cache.attn);
}

double predict_wgcf(const ModelParams& params, Id u, Id i,
                    std::span<const Id> user_row,
                    std::span<const Id> item_row) {
  RowSet rows;
  rows.user1 = user_row;
  rows.item1 = item_row;
  ForwardCache cache;
  return forward_kind(params, ModelKind::WGCF, u, i, rows, cache);
}

double predict_agcf(const ModelParams& params, Id u, Id i,
                    std::span<const Id> user_row,
                    std::span<const Id> item_row) {
  RowSet rows;
  rows.user1 = user_row;
  rows.item1 = item_row;
  ForwardCache cache;
  return forward_kind(params, ModelKind::AGCF, u, i, rows, cache);
}

double predict_agcf2(const ModelParams& params, Id u, Id i,
                     std::span<const Id> user_row,
                     std::span<const Id> item_row,
                     std::span<const Id> user_row2,
                     std::span<const Id> item_row2) {
  RowSet rows;
  rows.user1 = user_row;
  rows.item1 = item_row;
  rows.user2 = user_row2;
  rows.item2 = item_row2;
  ForwardCache cache;
  return forward_kind(params, ModelKind::AGCF2, u, i, rows, cache);
}

}  // namespace graphcf
