#include "graphcf/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <random>
#include <string>
#include <utility>

#include "graphcf/adaptive.hpp"
#include "graphcf/evaluate.hpp"

namespace graphcf {

void GradTable::reset_shape(Id rows_, int dim_) {
  rows = rows_;
  dim = dim_;
  data.assign(static_cast<std::size_t>(rows_) * static_cast<std::size_t>(dim_),
              0.0);
  stamp.assign(static_cast<std::size_t>(rows_), 0);
  touched.clear();
  tick = 0;
}

void GradTable::next_batch() {
  ++tick;
  touched.clear();
}

std::span<double> GradTable::row(Id r) {
  if (r < 0 || r >= rows)
    throw Error(Status::Internal,
                "gradient row " + std::to_string(r) + " out of range");
  auto idx = static_cast<std::size_t>(r);
  std::span<double> out{data.data() + idx * static_cast<std::size_t>(dim),
                        static_cast<std::size_t>(dim)};
  if (stamp[idx] != tick) {
    stamp[idx] = tick;
    touched.push_back(r);
    std::fill(out.begin(), out.end(), 0.0);
  }
  return out;
}

double GradTable::at(std::size_t flat) const {
  if (dim == 0 || tick == 0) return 0.0;
  std::size_t r = flat / static_cast<std::size_t>(dim);
  return stamp[r] == tick ? data[flat] : 0.0;
}

void GradMlp::reset_shape(const MlpParams& shape) {
  layers.assign(shape.layers.begin(), shape.layers.end());
  zero();
}

void GradMlp::zero() {
  for (MlpLayer& l : layers) {
    std::fill(l.w.begin(), l.w.end(), 0.0);
    std::fill(l.b.begin(), l.b.end(), 0.0);
  }
}

void Gradients::reset(const ModelParams& p) {
  P.reset_shape(p.P.rows, p.P.dim);
  Q.reset_shape(p.Q.rows, p.Q.dim);
  Y.reset_shape(p.Y.rows, p.Y.dim);
  X.reset_shape(p.X.rows, p.X.dim);
  Y2.reset_shape(p.Y2.rows, p.Y2.dim);
  X2.reset_shape(p.X2.rows, p.X2.dim);
  alpha.reset_shape(p.alpha.rows, p.alpha.dim);
  beta.reset_shape(p.beta.rows, p.beta.dim);
  b_user.reset_shape(static_cast<Id>(p.b_user.size()), 1);
  b_item.reset_shape(static_cast<Id>(p.b_item.size()), 1);
  b_global = 0.0;
  attn_user.reset_shape(p.attn_user);
  attn_item.reset_shape(p.attn_item);
  attn_user2.reset_shape(p.attn_user2);
  attn_item2.reset_shape(p.attn_item2);
}

void Gradients::next_batch() {
  P.next_batch();
  Q.next_batch();
  Y.next_batch();
  X.next_batch();
  Y2.next_batch();
  X2.next_batch();
  alpha.next_batch();
  beta.next_batch();
  b_user.next_batch();
  b_item.next_batch();
  b_global = 0.0;
  attn_user.zero();
  attn_item.zero();
  attn_user2.zero();
  attn_item2.zero();
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) s += a[d] * b[d];
  return s;
}

double sqnorm(std::span<const double> a) { return dot(a, a); }

}  // namespace

void mlp_backward(const MlpParams& mlp,
                  const std::vector<std::vector<double>>& acts, double dscore,
                  GradMlp& gmlp, std::span<double> dinput, Workspace& ws) {
  std::vector<double>& dpre = ws.mlp_a;
  std::vector<double>& dprev = ws.mlp_b;
  dpre.assign(1, dscore);
  for (std::size_t l = mlp.layers.size(); l-- > 0;) {
    const MlpLayer& layer = mlp.layers[l];
    MlpLayer& g = gmlp.layers[l];
    // acts[l] holds this layer's input: raw features for l == 0, otherwise the
    // previous layer's pre-activations (ReLU applied on read).
    const std::vector<double>& in_act = acts[l];
    if (l > 0) dprev.assign(in_act.size(), 0.0);
    for (int o = 0; o < layer.out; ++o) {
      const double d = dpre[static_cast<std::size_t>(o)];
      if (d == 0.0) continue;
      g.b[static_cast<std::size_t>(o)] += d;
      const double* w = layer.w.data() + static_cast<std::size_t>(o) * layer.in;
      double* gw = g.w.data() + static_cast<std::size_t>(o) * layer.in;
      for (int di = 0; di < layer.in; ++di) {
        const double a = in_act[static_cast<std::size_t>(di)];
        if (l == 0) {
          gw[di] += d * a;
          dinput[static_cast<std::size_t>(di)] += d * w[di];
        } else if (a > 0.0) {
          gw[di] += d * a;
          dprev[static_cast<std::size_t>(di)] += d * w[di];
        }
      }
    }
    if (l > 0) std::swap(dpre, dprev);
  }
}

namespace {

// One feedback side of the backward pass; dside is dL/d(su or si).
void backward_uniform(std::span<const Id> row, const EmbeddingTable& table,
                      GradTable& gtable, std::span<const double> dside,
                      double c, double lambda) {
  for (Id entry : row) {
    const Id idx = table.index_of(entry);
    std::span<const double> e = table.row(idx);
    std::span<double> g = gtable.row(idx);
    for (std::size_t d = 0; d < g.size(); ++d)
      g[d] += c * dside[d] + 2.0 * lambda * e[d];
  }
}

void backward_weighted(std::span<const Id> row, const EmbeddingTable& table,
                       GradTable& gtable, std::span<const double> dside,
                       std::span<const double> phi,
                       std::span<const double> ent_fac,
                       std::span<double> g_ent_fac,
                       const EmbeddingTable& slot_fac, GradTable& g_slot_fac,
                       double lambda, double lambda_r) {
  for (std::size_t s = 0; s < row.size(); ++s) {
    const Id idx = table.index_of(row[s]);
    std::span<const double> e = table.row(idx);
    std::span<double> g = gtable.row(idx);
    const double dphi = dot(e, dside);
    for (std::size_t d = 0; d < g.size(); ++d)
      g[d] += phi[s] * dside[d] + 2.0 * lambda * e[d];
    const Id fidx = slot_fac.index_of(row[s]);
    std::span<const double> f = slot_fac.row(fidx);
    std::span<double> gf = g_slot_fac.row(fidx);
    for (std::size_t d = 0; d < gf.size(); ++d) {
      g_ent_fac[d] += dphi * f[d];
      gf[d] += dphi * ent_fac[d] + 2.0 * lambda_r * f[d];
    }
  }
  for (std::size_t d = 0; d < g_ent_fac.size(); ++d)
    g_ent_fac[d] += 2.0 * lambda_r * ent_fac[d];
}

void backward_attentive(std::span<const Id> row, const EmbeddingTable& table,
                        GradTable& gtable, std::span<const double> dside,
                        const SideCache& sc, const MlpParams& mlp,
                        GradMlp& gmlp, std::span<double> g_ent,
                        double temperature, bool mask_pad, double lambda,
                        std::size_t ent_dim, Workspace& ws) {
  const std::size_t k = row.size();
  // dL/da_s and the softmax coupling term sum_r a_r * dL/da_r.
  double coupling = 0.0;
  for (std::size_t s = 0; s < k; ++s) {
    if (mask_pad && row[s] == kPad) continue;
    coupling += sc.attn[s] * dot(table.row_for(row[s]), dside);
  }
  for (std::size_t s = 0; s < k; ++s) {
    if (mask_pad && row[s] == kPad) continue;
    const Id idx = table.index_of(row[s]);
    std::span<const double> e = table.row(idx);
    const double gscore = dot(e, dside);
    std::span<double> g = gtable.row(idx);
    for (std::size_t d = 0; d < g.size(); ++d)
      g[d] += sc.attn[s] * dside[d] + 2.0 * lambda * e[d];
    const double draw = sc.attn[s] * (gscore - coupling) / temperature;
    ws.dinput.assign(ent_dim + g.size(), 0.0);
    mlp_backward(mlp, sc.mlp_acts[s], draw, gmlp, ws.dinput, ws);
    for (std::size_t d = 0; d < ent_dim; ++d) g_ent[d] += ws.dinput[d];
    for (std::size_t d = 0; d < g.size(); ++d) g[d] += ws.dinput[ent_dim + d];
  }
}

double side_penalty(AggMode mode, std::span<const Id> row,
                    const EmbeddingTable& table, double lambda,
                    bool mask_pad) {
  if (mode == AggMode::None) return 0.0;
  double loss = 0.0;
  for (Id entry : row) {
    if (mode == AggMode::Attentive && mask_pad && entry == kPad) continue;
    loss += lambda * sqnorm(table.row_for(entry));
  }
  return loss;
}

}  // namespace

double record_loss(const ModelParams& params, const RowSet& rows, Id u, Id i,
                   double score, double rhat, const TrainConfig& cfg) {
  const ModelKind kind = params.spec.kind;
  const bool mask_pad = params.spec.mask_pad;
  const double err = rhat - score;
  double loss = err * err;
  loss += cfg.lambda * (sqnorm(params.P.row(u)) + sqnorm(params.Q.row(i)));
  const AggMode um = user_agg_mode(kind);
  const AggMode im = item_agg_mode(kind);
  loss += side_penalty(um, rows.user1, params.Y, cfg.lambda, mask_pad);
  loss += side_penalty(im, rows.item1, params.X, cfg.lambda, mask_pad);
  if (um == AggMode::Weighted) {
    loss += cfg.lambda_r * sqnorm(params.alpha.row(u));
    for (Id entry : rows.user1)
      loss += cfg.lambda_r * sqnorm(params.beta.row_for(entry));
  }
  if (im == AggMode::Weighted) {
    loss += cfg.lambda_r * sqnorm(params.beta.row(i));
    for (Id entry : rows.item1)
      loss += cfg.lambda_r * sqnorm(params.alpha.row_for(entry));
  }
  if (has_step_two(kind)) {
    loss += side_penalty(AggMode::Attentive, rows.user2, params.Y2,
                         cfg.lambda, mask_pad);
    loss += side_penalty(AggMode::Attentive, rows.item2, params.X2,
                         cfg.lambda, mask_pad);
  }
  return loss;
}

void accumulate_gradients(const ModelParams& params, const RowSet& rows, Id u,
                          Id i, double score, const ForwardCache& cache,
                          const TrainConfig& cfg, Gradients& grads,
                          Workspace& ws) {
  const ModelSpec& spec = params.spec;
  const ModelKind kind = spec.kind;
  const auto K = static_cast<std::size_t>(spec.factors);
  const double err = cache.rhat - score;
  const double dz =
      2.0 * err * scale_derivative(cache.z, cache.rhat, spec.scale_kind);

  ws.dsu.resize(K);
  ws.dsi.resize(K);
  for (std::size_t d = 0; d < K; ++d) {
    ws.dsu[d] = dz * cache.si[d];
    ws.dsi[d] = dz * cache.su[d];
  }

  grads.b_user.row(u)[0] += dz;
  grads.b_item.row(i)[0] += dz;
  grads.b_global += dz;

  {
    std::span<double> gp = grads.P.row(u);
    std::span<const double> pu = params.P.row(u);
    for (std::size_t d = 0; d < K; ++d)
      gp[d] += ws.dsu[d] + 2.0 * cfg.lambda * pu[d];
  }
  {
    std::span<double> gq = grads.Q.row(i);
    std::span<const double> qi = params.Q.row(i);
    for (std::size_t d = 0; d < K; ++d)
      gq[d] += ws.dsi[d] + 2.0 * cfg.lambda * qi[d];
  }

  switch (user_agg_mode(kind)) {
    case AggMode::None:
      break;
    case AggMode::Uniform:
      backward_uniform(rows.user1, params.Y, grads.Y, ws.dsu,
                       uniform_norm(spec.norm_mode, rows.user1.size(),
                                    rows.user_degree, "user"),
                       cfg.lambda);
      break;
    case AggMode::Weighted:
      backward_weighted(rows.user1, params.Y, grads.Y, ws.dsu, cache.u1.phi,
                        params.alpha.row(u), grads.alpha.row(u), params.beta,
                        grads.beta, cfg.lambda, cfg.lambda_r);
      break;
    case AggMode::Attentive:
      backward_attentive(rows.user1, params.Y, grads.Y, ws.dsu, cache.u1,
                         params.attn_user, grads.attn_user, grads.P.row(u),
                         spec.attention.temperature, spec.mask_pad, cfg.lambda,
                         K, ws);
      break;
  }
  switch (item_agg_mode(kind)) {
    case AggMode::None:
      break;
    case AggMode::Uniform:
      backward_uniform(rows.item1, params.X, grads.X, ws.dsi,
                       uniform_norm(spec.norm_mode, rows.item1.size(),
                                    rows.item_degree, "item"),
                       cfg.lambda);
      break;
    case AggMode::Weighted:
      backward_weighted(rows.item1, params.X, grads.X, ws.dsi, cache.i1.phi,
                        params.beta.row(i), grads.beta.row(i), params.alpha,
                        grads.alpha, cfg.lambda, cfg.lambda_r);
      break;
    case AggMode::Attentive:
      backward_attentive(rows.item1, params.X, grads.X, ws.dsi, cache.i1,
                         params.attn_item, grads.attn_item, grads.Q.row(i),
                         spec.attention.temperature, spec.mask_pad, cfg.lambda,
                         K, ws);
      break;
  }
  if (has_step_two(kind)) {
    backward_attentive(rows.user2, params.Y2, grads.Y2, ws.dsu, cache.u2,
                       params.attn_user2, grads.attn_user2, grads.P.row(u),
                       spec.attention.temperature, spec.mask_pad, cfg.lambda,
                       K, ws);
    backward_attentive(rows.item2, params.X2, grads.X2, ws.dsi, cache.i2,
                       params.attn_item2, grads.attn_item2, grads.Q.row(i),
                       spec.attention.temperature, spec.mask_pad, cfg.lambda,
                       K, ws);
  }
}

namespace {

void update_table(EmbeddingTable& t, const GradTable& g, double step) {
  for (Id r : g.touched) {
    std::span<double> row = t.row(r);
    const double* grow =
        g.data.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(g.dim);
    for (std::size_t d = 0; d < row.size(); ++d) row[d] -= step * grow[d];
  }
}

void update_bias(std::vector<double>& b, const GradTable& g, double step) {
  for (Id r : g.touched)
    b[static_cast<std::size_t>(r)] -= step * g.data[static_cast<std::size_t>(r)];
}

void update_mlp(MlpParams& m, const GradMlp& g, double step) {
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    MlpLayer& layer = m.layers[l];
    const MlpLayer& gl = g.layers[l];
    for (std::size_t j = 0; j < layer.w.size(); ++j)
      layer.w[j] -= step * gl.w[j];
    for (std::size_t j = 0; j < layer.b.size(); ++j)
      layer.b[j] -= step * gl.b[j];
  }
}

}  // namespace

void apply_updates(ModelParams& params, const Gradients& grads, double step) {
  update_table(params.P, grads.P, step);
  update_table(params.Q, grads.Q, step);
  update_table(params.Y, grads.Y, step);
  update_table(params.X, grads.X, step);
  update_table(params.Y2, grads.Y2, step);
  update_table(params.X2, grads.X2, step);
  update_table(params.alpha, grads.alpha, step);
  update_table(params.beta, grads.beta, step);
  update_bias(params.b_user, grads.b_user, step);
  update_bias(params.b_item, grads.b_item, step);
  params.b_global -= step * grads.b_global;
  update_mlp(params.attn_user, grads.attn_user, step);
  update_mlp(params.attn_item, grads.attn_item, step);
  update_mlp(params.attn_user2, grads.attn_user2, step);
  update_mlp(params.attn_item2, grads.attn_item2, step);
}

namespace {

// Named flat views over every allocated block, with an optional matching
// gradient lookup. Single source for the finite-difference sweep and the
// non-finite diagnostics so the two can't drift apart.
struct BlockRef {
  std::string name;
  std::span<double> vals;
  std::function<double(std::size_t)> grad;
};

std::vector<BlockRef> param_blocks(ModelParams& p, const Gradients* g) {
  std::vector<BlockRef> out;
  auto add = [&](std::string name, std::span<double> vals,
                 std::function<double(std::size_t)> grad) {
    if (vals.empty()) return;
    out.push_back(BlockRef{std::move(name), vals, std::move(grad)});
  };
  auto table = [&](const char* name, EmbeddingTable& t,
                   const GradTable Gradients::* member) {
    std::function<double(std::size_t)> grad;
    if (g != nullptr) {
      const GradTable* gt = &(g->*member);
      grad = [gt](std::size_t j) { return gt->at(j); };
    }
    add(name, t.data, std::move(grad));
  };
  table("P", p.P, &Gradients::P);
  table("Q", p.Q, &Gradients::Q);
  table("Y", p.Y, &Gradients::Y);
  table("X", p.X, &Gradients::X);
  table("Y2", p.Y2, &Gradients::Y2);
  table("X2", p.X2, &Gradients::X2);
  table("alpha", p.alpha, &Gradients::alpha);
  table("beta", p.beta, &Gradients::beta);

  auto bias = [&](const char* name, std::vector<double>& b,
                  const GradTable Gradients::* member) {
    std::function<double(std::size_t)> grad;
    if (g != nullptr) {
      const GradTable* gt = &(g->*member);
      grad = [gt](std::size_t j) { return gt->at(j); };
    }
    add(name, b, std::move(grad));
  };
  bias("b_user", p.b_user, &Gradients::b_user);
  bias("b_item", p.b_item, &Gradients::b_item);
  add("b_global", std::span<double>(&p.b_global, 1),
      g != nullptr ? std::function<double(std::size_t)>(
                         [g](std::size_t) { return g->b_global; })
                   : std::function<double(std::size_t)>());

  auto mlp = [&](const char* name, MlpParams& m,
                 const GradMlp Gradients::* member) {
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
      std::function<double(std::size_t)> gw, gb;
      if (g != nullptr) {
        const MlpLayer* gl = &(g->*member).layers[l];
        gw = [gl](std::size_t j) { return gl->w[j]; };
        gb = [gl](std::size_t j) { return gl->b[j]; };
      }
      add(std::string(name) + ".w" + std::to_string(l), m.layers[l].w,
          std::move(gw));
      add(std::string(name) + ".b" + std::to_string(l), m.layers[l].b,
          std::move(gb));
    }
  };
  mlp("attn_user", p.attn_user, &Gradients::attn_user);
  mlp("attn_item", p.attn_item, &Gradients::attn_item);
  mlp("attn_user2", p.attn_user2, &Gradients::attn_user2);
  mlp("attn_item2", p.attn_item2, &Gradients::attn_item2);
  return out;
}

double side_kink_margin(const SideCache& sc) {
  double m = std::numeric_limits<double>::infinity();
  if (!sc.active) return m;
  for (const auto& acts : sc.mlp_acts) {
    // acts[0] is the input, acts.back() the linear output; the hidden
    // pre-activations in between sit next to the ReLU kink.
    for (std::size_t l = 1; l + 1 < acts.size(); ++l)
      for (double v : acts[l]) m = std::min(m, std::abs(v));
  }
  return m;
}

double kink_margin(const ForwardCache& cache, const ModelSpec& spec) {
  double m = std::min(std::min(side_kink_margin(cache.u1),
                               side_kink_margin(cache.i1)),
                      std::min(side_kink_margin(cache.u2),
                               side_kink_margin(cache.i2)));
  if (spec.scale_kind == ScaleKind::Clamp)
    m = std::min({m, std::abs(cache.z), std::abs(cache.z - 1.0)});
  return m;
}

[[noreturn]] void abort_non_finite(const ModelParams& params, int epoch,
                                   const char* where) {
  // The params copy is only scanned, never written.
  auto& mutable_params = const_cast<ModelParams&>(params);
  std::string bad;
  std::string largest;
  double largest_mag = -1.0;
  for (const BlockRef& b : param_blocks(mutable_params, nullptr)) {
    for (double v : b.vals) {
      if (!std::isfinite(v) && bad.empty()) bad = b.name;
      if (std::isfinite(v) && std::abs(v) > largest_mag) {
        largest_mag = std::abs(v);
        largest = b.name;
      }
    }
  }
  std::string msg = std::string("training diverged at epoch ") +
                    std::to_string(epoch) + ": non-finite " + where;
  if (!bad.empty())
    msg += ", first non-finite parameter block: " + bad;
  else
    msg += ", largest parameter magnitude " + std::to_string(largest_mag) +
           " in block " + largest;
  msg += "; lower learning_rate or the lambdas";
  throw Error(Status::Numeric, msg);
}

}  // namespace

FiniteDiffReport finite_diff_check(const ModelParams& params,
                                   std::span<const RatingRecord> batch,
                                   const FeedbackViews& views,
                                   const TrainConfig& cfg, double eps) {
  if (batch.empty())
    throw Error(Status::InvalidArgument, "finite-difference batch is empty");
  if (eps <= 0.0)
    throw Error(Status::InvalidArgument, "finite-difference step must be > 0");
  ModelParams work = params;
  const ModelKind kind = work.spec.kind;

  Gradients grads;
  grads.reset(work);
  grads.next_batch();
  Workspace ws;
  FiniteDiffReport report;
  for (const RatingRecord& rec : batch) {
    RowSet rows = rows_for(work, kind, views, rec.user, rec.item);
    forward_kind(work, kind, rec.user, rec.item, rows, ws.cache);
    report.min_kink_margin =
        std::min(report.min_kink_margin, kink_margin(ws.cache, work.spec));
    accumulate_gradients(work, rows, rec.user, rec.item, rec.score, ws.cache,
                         cfg, grads, ws);
  }

  ForwardCache probe_cache;
  auto objective = [&]() {
    double o = 0.0;
    for (const RatingRecord& rec : batch) {
      RowSet rows = rows_for(work, kind, views, rec.user, rec.item);
      const double rhat =
          forward_kind(work, kind, rec.user, rec.item, rows, probe_cache);
      o += record_loss(work, rows, rec.user, rec.item, rec.score, rhat, cfg);
    }
    return o;
  };

  for (BlockRef& block : param_blocks(work, &grads)) {
    BlockCheck check;
    check.block = block.name;
    for (std::size_t j = 0; j < block.vals.size(); ++j) {
      const double saved = block.vals[j];
      block.vals[j] = saved + eps;
      const double plus = objective();
      block.vals[j] = saved - eps;
      const double minus = objective();
      block.vals[j] = saved;
      const double numeric = (plus - minus) / (2.0 * eps);
      const double analytic = block.grad(j);
      const double rel =
          std::abs(analytic - numeric) /
          std::max({std::abs(analytic), std::abs(numeric), 1e-4});
      ++check.checked;
      if (rel >= check.max_rel_err) {
        check.max_rel_err = rel;
        check.worst_index = j;
        check.worst_analytic = analytic;
        check.worst_numeric = numeric;
      }
    }
    report.checked += check.checked;
    report.max_rel_err = std::max(report.max_rel_err, check.max_rel_err);
    report.blocks.push_back(std::move(check));
  }
  return report;
}

TrainResult train_model(const Dataset& train_ds, const Dataset* test_ds,
                        const FeedbackViews& views, const TrainConfig& cfg,
                        const EpochCallback& on_epoch) {
  if (train_ds.records.empty())
    throw Error(Status::InvalidArgument, "training set is empty");
  if (cfg.learning_rate <= 0.0)
    throw Error(Status::Config, "learning_rate must be positive");
  if (cfg.epochs < 0) throw Error(Status::Config, "epochs must be >= 0");
  if (cfg.batch_size < 1) throw Error(Status::Config, "batch_size must be >= 1");
  if (cfg.lambda < 0.0 || cfg.lambda_r < 0.0)
    throw Error(Status::Config, "lambda and lambda_r must be >= 0");

  TrainResult result{
      init_params(cfg.model, train_ds.n_users, train_ds.n_items, cfg.seed),
      {}};
  ModelParams& model = result.params;
  const ModelKind kind = model.spec.kind;

  Gradients grads;
  grads.reset(model);
  Workspace ws;
  std::mt19937_64 order_rng(mix_seed(cfg.seed, /*stream=*/0x0eb0c));
  std::vector<std::size_t> order(train_ds.records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    shuffle_indices(order, order_rng);
    double objective = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(start + batch, order.size());
      grads.next_batch();
      for (std::size_t pos = start; pos < end; ++pos) {
        const RatingRecord& rec = train_ds.records[order[pos]];
        RowSet rows = rows_for(model, kind, views, rec.user, rec.item);
        const double rhat =
            forward_kind(model, kind, rec.user, rec.item, rows, ws.cache);
        if (!std::isfinite(rhat))
          abort_non_finite(model, epoch + 1, "prediction");
        objective += record_loss(model, rows, rec.user, rec.item, rec.score,
                                 rhat, cfg);
        accumulate_gradients(model, rows, rec.user, rec.item, rec.score,
                             ws.cache, cfg, grads, ws);
      }
      apply_updates(model, grads,
                    cfg.learning_rate / static_cast<double>(end - start));
    }
    if (!std::isfinite(objective))
      abort_non_finite(model, epoch + 1, "objective");

    EpochStats st;
    st.epoch = epoch + 1;  // 1-based everywhere a person sees it
    st.objective = objective;
    st.train_rmse = rmse(model, views, train_ds.records);
    if (test_ds != nullptr && !test_ds->records.empty())
      st.test_rmse = rmse(model, views, test_ds->records);
    st.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    result.curve.push_back(st);
    if (on_epoch) on_epoch(st, model);
  }
  return result;
}

}  // namespace graphcf
