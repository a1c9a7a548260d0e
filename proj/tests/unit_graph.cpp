#include <algorithm>
#include <set>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "graphcf/dataset.hpp"
#include "graphcf/feedback.hpp"
#include "graphcf/graph.hpp"
#include "support/synthetic.hpp"
#include "support/test_util.hpp"

using namespace graphcf;

namespace {

Dataset parse(const std::string& text) {
  std::istringstream in(text);
  return parse_ratings(in, ColumnSpec{}, RatingScale{});
}

}  // namespace

TEST_CASE("single record yields singleton adjacency on both sides") {
  const Dataset ds = parse("a,x,4\n");
  const InteractionGraph g(ds);
  REQUIRE(g.user_neighbors(0).size() == 1);
  REQUIRE(g.item_neighbors(0).size() == 1);
  CHECK(g.user_neighbors(0)[0].id == 0);
  CHECK(g.user_neighbors(0)[0].raw == 4);
  CHECK(g.item_neighbors(0)[0].id == 0);
}

TEST_CASE("adjacency matches a linear-scan oracle and is sorted") {
  testsupport::SyntheticSpec spec;
  spec.n_users = 40;
  spec.n_items = 25;
  spec.seed = 5;
  const Dataset ds = testsupport::synthesize(spec);
  const InteractionGraph g(ds);

  CHECK(g.n_users() == ds.n_users);
  CHECK(g.n_items() == ds.n_items);
  for (Id u = 0; u < ds.n_users; ++u) {
    std::vector<Neighbor> expect;
    for (const RatingRecord& rec : ds.records)
      if (rec.user == u) expect.push_back({rec.item, rec.raw});
    std::sort(expect.begin(), expect.end(),
              [](const Neighbor& a, const Neighbor& b) { return a.id < b.id; });
    const auto got = g.user_neighbors(u);
    REQUIRE(got.size() == expect.size());
    for (std::size_t n = 0; n < expect.size(); ++n) {
      CHECK(got[n].id == expect[n].id);
      CHECK(got[n].raw == expect[n].raw);
    }
    CHECK(g.degree(Side::User, u) == static_cast<Id>(expect.size()));
  }

  const std::vector<Id> idegrees = g.degrees(Side::Item);
  std::int64_t total = 0;
  for (Id d : idegrees) total += d;
  CHECK(total == static_cast<std::int64_t>(ds.records.size()));
}

TEST_CASE("neighbors rejects out-of-range ids") {
  const Dataset ds = parse("a,x,4\n");
  const InteractionGraph g(ds);
  CHECK_THROWS_AS(g.user_neighbors(1), Error);
  CHECK_THROWS_AS(g.item_neighbors(-1), Error);
  CHECK_THROWS_AS(g.neighbors(Side::Item, 7), Error);
}

TEST_CASE("edge_raw finds existing edges only") {
  const Dataset ds = parse("a,x,4\na,y,2\nb,y,5\n");
  const InteractionGraph g(ds);
  CHECK(g.edge_raw(Side::User, 0, 1) == 2);
  CHECK(g.edge_raw(Side::Item, 1, 1) == 5);
  CHECK_FALSE(g.edge_raw(Side::User, 1, 0).has_value());
}

TEST_CASE("step-two candidates equal the 2-hop oracle") {
  testsupport::SyntheticSpec spec;
  spec.n_users = 30;
  spec.n_items = 20;
  spec.seed = 8;
  const Dataset ds = testsupport::synthesize(spec);
  const InteractionGraph g(ds);

  SamplePolicy policy;
  policy.k = 4;
  policy.seed = 3;
  const FeedbackTable item_fb = sample_random(g, Side::Item, policy);
  const FeedbackTable user_fb = sample_random(g, Side::User, policy);

  for (Id u = 0; u < ds.n_users; ++u) {
    // Walk u -> every true train item -> that item's sampled user row.
    std::set<Id> oracle;
    for (const Neighbor& nb : g.user_neighbors(u))
      for (Id v : item_fb.row(nb.id))
        if (v != kPad) oracle.insert(v);
    const std::vector<Id> got = step_two_user_candidates(g, u, item_fb);
    CHECK(std::is_sorted(got.begin(), got.end()));
    CHECK(got == std::vector<Id>(oracle.begin(), oracle.end()));

    std::set<Id> no_self = oracle;
    no_self.erase(u);
    const std::vector<Id> excl = step_two_user_candidates(g, u, item_fb, true);
    CHECK(excl == std::vector<Id>(no_self.begin(), no_self.end()));
  }
  for (Id i = 0; i < ds.n_items; ++i) {
    std::set<Id> oracle;
    for (const Neighbor& nb : g.item_neighbors(i))
      for (Id j : user_fb.row(nb.id))
        if (j != kPad) oracle.insert(j);
    CHECK(step_two_item_candidates(g, i, user_fb) ==
          std::vector<Id>(oracle.begin(), oracle.end()));
  }
}

TEST_CASE("adjacency dump lists every entity") {
  const Dataset ds = parse("a,x,4\na,y,2\nb,y,5\n");
  const InteractionGraph g(ds);
  testsupport::TempDir dir("graphcf-adj");
  save_adjacency(g, Side::User, dir.file("u.tsv"));
  const std::string text = testsupport::slurp(dir.file("u.tsv"));
  CHECK(text == "0\t0,1\n1\t1\n");
}
