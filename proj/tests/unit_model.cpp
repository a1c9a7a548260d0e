#include <cmath>
#include <vector>

#include "doctest.h"
#include "graphcf/feedback.hpp"
#include "graphcf/model.hpp"
#include "graphcf/params.hpp"

using namespace graphcf;

namespace {

ModelParams tiny(ModelKind kind, Id n_users = 3, Id n_items = 4, int K = 2,
                 int k = 3) {
  ModelSpec spec;
  spec.kind = kind;
  spec.factors = K;
  spec.feedback_factors = K;
  spec.feedback_width = k;
  return init_params(spec, n_users, n_items, 1);
}

}  // namespace

TEST_CASE("logistic scale and derivative") {
  CHECK(scale_value(0.0) == 0.5);
  CHECK(scale_value(40.0) == doctest::Approx(1.0));
  CHECK(scale_value(-40.0) == doctest::Approx(0.0).epsilon(1e-12));
  const double fz = scale_value(0.7);
  CHECK(fz == doctest::Approx(1.0 / (1.0 + std::exp(-0.7))));
  CHECK(scale_derivative(0.7, fz, ScaleKind::Logistic) ==
        doctest::Approx(fz * (1.0 - fz)));
  // slope against a central difference
  const double h = 1e-6;
  const double num = (scale_value(0.7 + h) - scale_value(0.7 - h)) / (2 * h);
  CHECK(scale_derivative(0.7, fz, ScaleKind::Logistic) ==
        doctest::Approx(num).epsilon(1e-6));
}

TEST_CASE("clamp scale and derivative") {
  CHECK(scale_value(-0.2, ScaleKind::Clamp) == 0.0);
  CHECK(scale_value(0.37, ScaleKind::Clamp) == 0.37);
  CHECK(scale_value(1.4, ScaleKind::Clamp) == 1.0);
  CHECK(scale_derivative(0.37, 0.37, ScaleKind::Clamp) == 1.0);
  CHECK(scale_derivative(-0.2, 0.0, ScaleKind::Clamp) == 0.0);
  CHECK(scale_derivative(1.4, 1.0, ScaleKind::Clamp) == 0.0);
}

TEST_CASE("uniform normalizer") {
  CHECK(uniform_norm(NormMode::SampledWidth, 20, -1, "user") ==
        doctest::Approx(1.0 / std::sqrt(20.0)));
  CHECK(uniform_norm(NormMode::TrueDegree, 20, 9, "user") ==
        doctest::Approx(1.0 / 3.0));
  CHECK(uniform_norm(NormMode::TrueDegree, 20, 0, "user") == 0.0);
  CHECK_THROWS_AS(uniform_norm(NormMode::TrueDegree, 20, -1, "user"), Error);
}

TEST_CASE("uniform aggregate equals a hand oracle and maps PAD") {
  EmbeddingTable t;
  t.rows = 3;  // entries 0, 1 and the PAD row
  t.dim = 2;
  t.data = {1.0, 2.0, 3.0, 4.0, 10.0, 20.0};
  const std::vector<Id> row = {0, 1, kPad};
  const std::vector<double> agg = aggregate_uniform(row, t);
  const double c = 1.0 / std::sqrt(3.0);
  CHECK(agg[0] == doctest::Approx(c * (1.0 + 3.0 + 10.0)));
  CHECK(agg[1] == doctest::Approx(c * (2.0 + 4.0 + 20.0)));

  EmbeddingTable zero = t;
  for (double& v : zero.data) v = 0.0;
  for (double v : aggregate_uniform(row, zero)) CHECK(v == 0.0);
}

TEST_CASE("predict_mf matches the written-out formula") {
  ModelParams p = tiny(ModelKind::MF);
  p.P.row(1)[0] = 0.1;
  p.P.row(1)[1] = 0.2;
  p.Q.row(2)[0] = 0.3;
  p.Q.row(2)[1] = -0.4;
  p.b_user[1] = 0.05;
  p.b_item[2] = -0.02;
  p.b_global = 0.01;
  const double z = 0.01 + 0.05 - 0.02 + (0.1 * 0.3 + 0.2 * -0.4);
  CHECK(predict_mf(p, 1, 2) == doctest::Approx(1.0 / (1.0 + std::exp(-z))));
  CHECK_THROWS_AS(predict_mf(p, 5, 0), Error);
  CHECK_THROWS_AS(predict_mf(p, 0, -1), Error);
}

TEST_CASE("all-PAD feedback with a zero PAD row reduces SVD++ to MF") {
  ModelParams p = tiny(ModelKind::SVDPP);
  randomize_params(p, 0.3, 7);
  for (double& v : p.Y.row(p.Y.rows - 1)) v = 0.0;
  const std::vector<Id> pads(3, kPad);
  CHECK(predict_svdpp(p, 1, 2, pads) == predict_mf(p, 1, 2));
}

TEST_CASE("svdpp aggregate shifts only the user vector") {
  ModelParams p = tiny(ModelKind::SVDPP);
  randomize_params(p, 0.3, 3);
  const std::vector<Id> row = {2, 0, kPad};

  const double c = 1.0 / std::sqrt(3.0);
  std::vector<double> su = {p.P.row(1)[0], p.P.row(1)[1]};
  for (Id entry : row) {
    const auto y = p.Y.row_for(entry);
    for (int d = 0; d < 2; ++d) su[static_cast<std::size_t>(d)] += c * y[d];
  }
  const auto q = p.Q.row(2);
  double z = p.b_global + p.b_user[1] + p.b_item[2];
  for (int d = 0; d < 2; ++d) z += su[static_cast<std::size_t>(d)] * q[d];
  CHECK(predict_svdpp(p, 1, 2, row) ==
        doctest::Approx(1.0 / (1.0 + std::exp(-z))).epsilon(1e-15));
}

TEST_CASE("gcf with zero feedback tables reduces to MF") {
  ModelParams p = tiny(ModelKind::GCF);
  randomize_params(p, 0.3, 5);
  for (double& v : p.Y.data) v = 0.0;
  for (double& v : p.X.data) v = 0.0;
  const std::vector<Id> urow = {0, 1, 2};
  const std::vector<Id> irow = {1, 2, kPad};
  CHECK(predict_gcf(p, 0, 3, urow, irow) == predict_mf(p, 0, 3));
}

TEST_CASE("rows_for reports missing tables by kind") {
  ModelParams p = tiny(ModelKind::GCF);
  FeedbackViews views;  // nothing in it
  try {
    rows_for(p, ModelKind::GCF, views, 0, 0);
    FAIL("missing table accepted");
  } catch (const Error& e) {
    CHECK(e.status() == Status::State);
    CHECK(std::string(e.what()).find("gcf") != std::string::npos);
  }
}

TEST_CASE("predict dispatches through the views") {
  ModelParams p = tiny(ModelKind::GCF, 4, 4, 2, 2);
  randomize_params(p, 0.2, 11);

  FeedbackTable user_fb;
  user_fb.side = Side::User;
  user_fb.k = 2;
  user_fb.n_entities = 4;
  user_fb.entries = {0, 1, 2, 3, 1, kPad, 0, 0};
  FeedbackTable item_fb;
  item_fb.side = Side::Item;
  item_fb.k = 2;
  item_fb.n_entities = 4;
  item_fb.entries = {1, 2, 0, 3, 2, 2, kPad, kPad};

  FeedbackViews views;
  views.user_step1 = &user_fb;
  views.item_step1 = &item_fb;
  CHECK(predict(p, views, 2, 1) ==
        predict_gcf(p, 2, 1, user_fb.row(2), item_fb.row(1)));
}

TEST_CASE("true-degree normalization reads the degree views") {
  ModelParams p = tiny(ModelKind::SVDPP, 3, 4, 2, 2);
  p.spec.norm_mode = NormMode::TrueDegree;
  randomize_params(p, 0.2, 13);

  FeedbackTable user_fb;
  user_fb.side = Side::User;
  user_fb.k = 2;
  user_fb.n_entities = 3;
  user_fb.entries = {0, 1, 2, 3, kPad, kPad};

  FeedbackViews views;
  views.user_step1 = &user_fb;
  CHECK_THROWS_AS(predict(p, views, 0, 0), Error);  // degrees missing

  const std::vector<Id> degrees = {4, 1, 0};
  views.user_degrees = &degrees;

  // degree 4 -> c = 1/2; oracle built on that
  std::vector<double> su = {p.P.row(0)[0], p.P.row(0)[1]};
  for (Id entry : user_fb.row(0)) {
    const auto y = p.Y.row_for(entry);
    for (int d = 0; d < 2; ++d) su[static_cast<std::size_t>(d)] += 0.5 * y[d];
  }
  double z = p.b_global + p.b_user[0] + p.b_item[0];
  for (int d = 0; d < 2; ++d)
    z += su[static_cast<std::size_t>(d)] * p.Q.row(0)[d];
  CHECK(predict(p, views, 0, 0) == doctest::Approx(scale_value(z)));

  // degree 0 drops the aggregate entirely
  CHECK(predict(p, views, 2, 0) == predict_mf(p, 2, 0));
}
