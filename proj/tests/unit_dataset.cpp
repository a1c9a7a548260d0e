#include <cmath>
#include <set>
#include <sstream>
#include <utility>

#include "doctest.h"
#include "graphcf/dataset.hpp"
#include "support/test_util.hpp"

using namespace graphcf;
using testsupport::TempDir;

namespace {

Dataset parse(const std::string& text, const ColumnSpec& spec = {},
              const RatingScale& scale = {}) {
  std::istringstream in(text);
  return parse_ratings(in, spec, scale);
}

}  // namespace

TEST_CASE("normalize_score maps the raw scale onto [0,1]") {
  const RatingScale five;  // 1..5
  CHECK(normalize_score(1, five) == 0.0);
  CHECK(normalize_score(5, five) == 1.0);
  CHECK(normalize_score(3, five) == 0.5);
  const RatingScale ten{1, 10};
  CHECK(normalize_score(4, ten) == doctest::Approx(3.0 / 9.0));
  CHECK_THROWS_AS(normalize_score(0, five), Error);
}

TEST_CASE("parse_ratings assigns dense ids in first-seen order") {
  const Dataset ds = parse("u9,m3,4\nu1,m3,5\nu9,m7,1\n");
  CHECK(ds.n_users == 2);
  CHECK(ds.n_items == 2);
  CHECK(ds.user_ids[0] == "u9");
  CHECK(ds.user_ids[1] == "u1");
  CHECK(ds.item_ids[0] == "m3");
  CHECK(ds.item_ids[1] == "m7");
  REQUIRE(ds.records.size() == 3);
  CHECK(ds.records[0].user == 0);
  CHECK(ds.records[1].user == 1);
  CHECK(ds.records[2].item == 1);
  CHECK(ds.records[0].score == doctest::Approx(0.75));
}

TEST_CASE("parse_ratings keeps the last duplicate") {
  const Dataset ds = parse("a,x,2\nb,x,3\na,x,5\n");
  REQUIRE(ds.records.size() == 2);
  for (const RatingRecord& rec : ds.records)
    if (rec.user == 0) CHECK(rec.raw == 5);
}

TEST_CASE("parse_ratings honors a custom column spec and delimiter") {
  ColumnSpec spec;
  spec.delimiter = "::";
  spec.user_col = 1;
  spec.item_col = 0;
  spec.score_col = 3;
  const Dataset ds = parse("itemA::userB::junk::4\n", spec);
  REQUIRE(ds.records.size() == 1);
  CHECK(ds.user_ids[0] == "userB");
  CHECK(ds.item_ids[0] == "itemA");
  CHECK(ds.records[0].raw == 4);
}

TEST_CASE("parse_ratings rejects malformed input with a line number") {
  CHECK_THROWS_WITH_AS(parse("a,x,5\nbroken\n"),
                       doctest::Contains("line 2"), Error);
  CHECK_THROWS_WITH_AS(parse("a,x,notanumber\n"),
                       doctest::Contains("line 1"), Error);
  try {
    parse("a,x,9\n");
    FAIL("out-of-scale raw accepted");
  } catch (const Error& e) {
    CHECK(e.status() == Status::InvalidArgument);
  }
  CHECK_THROWS_AS(parse(""), Error);
  CHECK_THROWS_AS(parse("\n   \n"), Error);
}

TEST_CASE("split keeps every user and item in train") {
  // 40 users x 6 items grid guarantees repeats of both sides.
  std::ostringstream text;
  for (int u = 0; u < 40; ++u)
    for (int i = 0; i < 6; ++i)
      text << "u" << u << ",i" << i << ',' << (1 + (u + i) % 5) << '\n';
  const Dataset ds = parse(text.str());
  const SplitDataset split = split_train_test(ds, 0.8, 99);

  CHECK(split.train.records.size() + split.test.records.size() ==
        ds.records.size());
  CHECK(split.achieved_fraction >= 0.8);
  CHECK(split.achieved_fraction ==
        doctest::Approx(static_cast<double>(split.train.records.size()) /
                        static_cast<double>(ds.records.size())));

  std::set<Id> train_users, train_items;
  for (const RatingRecord& rec : split.train.records) {
    train_users.insert(rec.user);
    train_items.insert(rec.item);
  }
  for (const RatingRecord& rec : split.test.records) {
    CHECK(train_users.count(rec.user) == 1);
    CHECK(train_items.count(rec.item) == 1);
  }

  // No record lost or duplicated across the two halves.
  std::set<std::pair<Id, Id>> all;
  for (const RatingRecord& rec : split.train.records)
    all.insert({rec.user, rec.item});
  for (const RatingRecord& rec : split.test.records)
    all.insert({rec.user, rec.item});
  CHECK(all.size() == ds.records.size());

  const SplitDataset again = split_train_test(ds, 0.8, 99);
  CHECK(again.train.records == split.train.records);
  CHECK(again.test.records == split.test.records);
  const SplitDataset other = split_train_test(ds, 0.8, 100);
  CHECK(other.train.records != split.train.records);
}

TEST_CASE("split rejects a fraction outside (0,1]") {
  const Dataset ds = parse("a,x,3\n");
  CHECK_THROWS_AS(split_train_test(ds, 0.0, 1), Error);
  CHECK_THROWS_AS(split_train_test(ds, 1.5, 1), Error);
}

TEST_CASE("feedback_histogram buckets by rating count") {
  const Dataset ds = parse("a,x,3\na,y,4\na,z,5\nb,x,1\n");
  const auto user_hist = feedback_histogram(ds, Side::User);
  CHECK(user_hist.at(3) == 1);
  CHECK(user_hist.at(1) == 1);
  std::int64_t total = 0;
  for (const auto& [count, entities] : user_hist) total += entities;
  CHECK(total == ds.n_users);

  const auto item_hist = feedback_histogram(ds, Side::Item);
  CHECK(item_hist.at(2) == 1);  // item x
  CHECK(item_hist.at(1) == 2);  // items y, z
}

TEST_CASE("dataset round-trips through the snapshot format") {
  const Dataset ds = parse("u9,m3,4\nu1,m3,5\nu9,m7,1\nu2,m9,3\n");
  TempDir dir("graphcf-dataset");
  save_dataset(ds, dir.file("data.dat"));
  save_id_maps(ds, dir.file("ids.tsv"));
  const Dataset back = load_dataset(dir.file("data.dat"), dir.file("ids.tsv"));
  CHECK(back == ds);
  CHECK(back.user_index.at("u9") == 0);
  CHECK_THROWS_AS(load_dataset(dir.file("missing.dat"), dir.file("ids.tsv")),
                  Error);
}

TEST_CASE("histogram file is stable csv") {
  const Dataset ds = parse("a,x,3\na,y,4\nb,x,1\n");
  TempDir dir("graphcf-hist");
  save_histogram(feedback_histogram(ds, Side::User), dir.file("h.csv"));
  CHECK(testsupport::slurp(dir.file("h.csv")) ==
        "count,frequency\n1,1\n2,1\n");
}
