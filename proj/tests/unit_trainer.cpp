#include <cmath>
#include <span>
#include <vector>

#include "doctest.h"
#include "graphcf/feedback.hpp"
#include "graphcf/graph.hpp"
#include "graphcf/model.hpp"
#include "graphcf/params.hpp"
#include "graphcf/trainer.hpp"
#include "support/synthetic.hpp"

using namespace graphcf;

namespace {

ModelParams mf_params(int K = 3, Id n_users = 5, Id n_items = 6,
                      std::uint64_t seed = 2) {
  ModelSpec spec;
  spec.kind = ModelKind::MF;
  spec.factors = K;
  spec.feedback_factors = K;
  ModelParams p = init_params(spec, n_users, n_items, seed);
  randomize_params(p, 0.4, seed + 1);
  return p;
}

double sqnorm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

Dataset small_train(std::uint64_t seed = 3) {
  testsupport::SyntheticSpec spec;
  spec.n_users = 25;
  spec.n_items = 15;
  spec.min_ratings = 2;
  spec.max_ratings = 8;
  spec.seed = seed;
  return testsupport::synthesize(spec);
}

}  // namespace

TEST_CASE("grad tables zero rows lazily per batch") {
  GradTable t;
  t.reset_shape(3, 2);
  t.next_batch();
  std::span<double> r1 = t.row(1);
  CHECK(r1[0] == 0.0);
  CHECK(r1[1] == 0.0);
  r1[0] = 4.0;
  r1[1] = -2.0;
  CHECK(t.row(1)[0] == 4.0);  // same batch keeps the accumulation
  CHECK(t.touched == std::vector<Id>{1});
  CHECK(t.at(2) == 4.0);   // flat index of row 1, dim 0
  CHECK(t.at(0) == 0.0);   // untouched row reads as zero
  CHECK(t.at(5) == 0.0);

  t.next_batch();
  CHECK(t.touched.empty());
  CHECK(t.row(1)[0] == 0.0);  // stale value invisible after the batch ends
  CHECK(t.at(2) == 0.0);
}

TEST_CASE("record_loss is zero for a perfect unregularized prediction") {
  const ModelParams p = mf_params();
  TrainConfig cfg;
  cfg.lambda = 0.0;
  cfg.lambda_r = 0.0;
  const double rhat = predict_mf(p, 1, 2);
  CHECK(record_loss(p, RowSet{}, 1, 2, rhat, rhat, cfg) == 0.0);
}

TEST_CASE("record_loss matches the mf objective term by term") {
  const ModelParams p = mf_params();
  TrainConfig cfg;
  cfg.lambda = 0.1;
  const double score = 0.75;
  const double rhat = predict_mf(p, 3, 4);
  const double expect = (rhat - score) * (rhat - score) +
                        0.1 * (sqnorm(p.P.row(3)) + sqnorm(p.Q.row(4)));
  CHECK(record_loss(p, RowSet{}, 3, 4, score, rhat, cfg) ==
        doctest::Approx(expect).epsilon(1e-15));
}

TEST_CASE("gradients vanish at a perfect unregularized fit") {
  const ModelParams p = mf_params();
  TrainConfig cfg;
  cfg.model = p.spec;
  cfg.lambda = 0.0;
  cfg.lambda_r = 0.0;
  ForwardCache cache;
  const double rhat = forward_kind(p, ModelKind::MF, 2, 1, RowSet{}, cache);
  Gradients grads;
  grads.reset(p);
  grads.next_batch();
  Workspace ws;
  accumulate_gradients(p, RowSet{}, 2, 1, rhat, cache, cfg, grads, ws);
  for (Id r : grads.P.touched)
    for (double g : grads.P.row(r)) CHECK(g == 0.0);
  for (Id r : grads.Q.touched)
    for (double g : grads.Q.row(r)) CHECK(g == 0.0);
  CHECK(grads.b_global == 0.0);
  CHECK(grads.b_user.at(2) == 0.0);
  CHECK(grads.b_item.at(1) == 0.0);
}

TEST_CASE("mf gradients follow the closed form") {
  const ModelParams p = mf_params(2);
  TrainConfig cfg;
  cfg.model = p.spec;
  cfg.lambda = 0.05;
  const Id u = 1, i = 3;
  const double score = 0.2;
  ForwardCache cache;
  const double rhat = forward_kind(p, ModelKind::MF, u, i, RowSet{}, cache);
  Gradients grads;
  grads.reset(p);
  grads.next_batch();
  Workspace ws;
  accumulate_gradients(p, RowSet{}, u, i, score, cache, cfg, grads, ws);

  const double dz =
      2.0 * (rhat - score) * scale_derivative(cache.z, rhat, ScaleKind::Logistic);
  for (int d = 0; d < 2; ++d) {
    const double gp = dz * p.Q.row(i)[d] + 2.0 * cfg.lambda * p.P.row(u)[d];
    const double gq = dz * p.P.row(u)[d] + 2.0 * cfg.lambda * p.Q.row(i)[d];
    CHECK(grads.P.row(u)[d] == doctest::Approx(gp).epsilon(1e-14));
    CHECK(grads.Q.row(i)[d] == doctest::Approx(gq).epsilon(1e-14));
  }
  CHECK(grads.b_user.row(u)[0] == doctest::Approx(dz).epsilon(1e-14));
  CHECK(grads.b_item.row(i)[0] == doctest::Approx(dz).epsilon(1e-14));
  CHECK(grads.b_global == doctest::Approx(dz).epsilon(1e-14));
}

TEST_CASE("two records accumulate additively") {
  const ModelParams p = mf_params(2);
  TrainConfig cfg;
  cfg.model = p.spec;
  cfg.lambda = 0.0;
  Workspace ws;
  auto grad_b_global = [&](bool both) {
    Gradients grads;
    grads.reset(p);
    grads.next_batch();
    ForwardCache cache;
    forward_kind(p, ModelKind::MF, 0, 0, RowSet{}, cache);
    accumulate_gradients(p, RowSet{}, 0, 0, 0.9, cache, cfg, grads, ws);
    if (both) {
      forward_kind(p, ModelKind::MF, 1, 1, RowSet{}, cache);
      accumulate_gradients(p, RowSet{}, 1, 1, 0.1, cache, cfg, grads, ws);
    }
    return grads.b_global;
  };
  const double first = grad_b_global(false);
  ForwardCache cache;
  forward_kind(p, ModelKind::MF, 1, 1, RowSet{}, cache);
  Gradients grads;
  grads.reset(p);
  grads.next_batch();
  accumulate_gradients(p, RowSet{}, 1, 1, 0.1, cache, cfg, grads, ws);
  CHECK(grad_b_global(true) ==
        doctest::Approx(first + grads.b_global).epsilon(1e-15));
}

TEST_CASE("apply_updates performs one plain sgd step") {
  ModelParams p = mf_params(2, 3, 3);
  const ModelParams before = p;
  Gradients grads;
  grads.reset(p);
  grads.next_batch();
  grads.P.row(1)[0] = 2.0;
  grads.P.row(1)[1] = -1.0;
  grads.b_item.row(2)[0] = 0.5;
  grads.b_global = 4.0;
  apply_updates(p, grads, 0.1);

  CHECK(p.P.row(1)[0] == doctest::Approx(before.P.row(1)[0] - 0.2));
  CHECK(p.P.row(1)[1] == doctest::Approx(before.P.row(1)[1] + 0.1));
  CHECK(p.b_item[2] == doctest::Approx(before.b_item[2] - 0.05));
  CHECK(p.b_global == doctest::Approx(before.b_global - 0.4));
  CHECK(p.P.row(0)[0] == before.P.row(0)[0]);  // untouched rows stay put
  CHECK(p.Q.data == before.Q.data);
}

TEST_CASE("analytic gradients agree with finite differences on the full stack") {
  const Dataset ds = small_train();
  const InteractionGraph g(ds);
  SamplePolicy policy;
  policy.k = 4;
  policy.seed = 6;
  const FeedbackTable u1 = sample_random(g, Side::User, policy);
  const FeedbackTable i1 = sample_random(g, Side::Item, policy);
  std::vector<std::vector<Id>> ucand, icand;
  for (Id u = 0; u < ds.n_users; ++u)
    ucand.push_back(step_two_user_candidates(g, u, i1));
  for (Id i = 0; i < ds.n_items; ++i)
    icand.push_back(step_two_item_candidates(g, i, u1));
  const FeedbackTable u2 = sample_step_two(Side::User, ucand, 4, 8);
  const FeedbackTable i2 = sample_step_two(Side::Item, icand, 4, 8);
  FeedbackViews views;
  views.user_step1 = &u1;
  views.item_step1 = &i1;
  views.user_step2 = &u2;
  views.item_step2 = &i2;

  TrainConfig cfg;
  cfg.model.kind = ModelKind::AGCF2;
  cfg.model.factors = 3;
  cfg.model.feedback_factors = 3;
  cfg.model.feedback_width = 4;
  cfg.model.attention.hidden = {4};
  cfg.lambda = 0.01;
  cfg.lambda_r = 1e-4;
  ModelParams p = init_params(cfg.model, ds.n_users, ds.n_items, 12);
  randomize_params(p, 0.5, 13);

  const std::span<const RatingRecord> batch(ds.records.data(), 3);
  const FiniteDiffReport report = finite_diff_check(p, batch, views, cfg, 1e-6);
  CHECK(report.checked > 100);
  CHECK(report.max_rel_err < 1e-4);
}

TEST_CASE("zero epochs returns the untouched initialization") {
  const Dataset ds = small_train(8);
  TrainConfig cfg;
  cfg.model.kind = ModelKind::MF;
  cfg.model.factors = 4;
  cfg.model.feedback_factors = 4;
  cfg.epochs = 0;
  cfg.seed = 77;
  const TrainResult r = train_model(ds, nullptr, FeedbackViews{}, cfg);
  CHECK(r.curve.empty());
  CHECK(r.params == init_params(cfg.model, ds.n_users, ds.n_items, 77));
}

TEST_CASE("training reduces the objective and reruns bit-identically") {
  const Dataset ds = small_train(12);
  TrainConfig cfg;
  cfg.model.kind = ModelKind::MF;
  cfg.model.factors = 4;
  cfg.model.feedback_factors = 4;
  cfg.epochs = 8;
  cfg.learning_rate = 0.3;
  cfg.batch_size = 32;
  cfg.seed = 5;
  int callbacks = 0;
  const TrainResult a = train_model(
      ds, &ds, FeedbackViews{}, cfg,
      [&](const EpochStats& st, const ModelParams&) {
        ++callbacks;
        CHECK(st.epoch == callbacks);
        CHECK(std::isfinite(st.test_rmse));
      });
  CHECK(callbacks == 8);
  REQUIRE(a.curve.size() == 8);
  CHECK(a.curve.back().objective < a.curve.front().objective);
  CHECK(a.curve.back().train_rmse < a.curve.front().train_rmse);

  const TrainResult b = train_model(ds, &ds, FeedbackViews{}, cfg);
  CHECK(a.params == b.params);
  for (std::size_t n = 0; n < a.curve.size(); ++n)
    CHECK(a.curve[n].objective == b.curve[n].objective);
}

TEST_CASE("divergence aborts with a diagnostic instead of silent nans") {
  const Dataset ds = small_train(4);
  TrainConfig cfg;
  cfg.model.kind = ModelKind::MF;
  cfg.model.factors = 4;
  cfg.model.feedback_factors = 4;
  cfg.epochs = 200;  // |p| grows geometrically; give it room to overflow
  cfg.learning_rate = 10.0;
  cfg.lambda = 1e3;  // the L2 pull alone overshoots and explodes
  CHECK_THROWS_WITH_AS(train_model(ds, nullptr, FeedbackViews{}, cfg),
                       doctest::Contains("diverged at epoch"), Error);
}
