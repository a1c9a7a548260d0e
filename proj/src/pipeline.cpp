#include "graphcf/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "graphcf/adaptive.hpp"
#include "graphcf/dataset.hpp"
#include "graphcf/evaluate.hpp"
#include "graphcf/feedback.hpp"
#include "graphcf/graph.hpp"
#include "graphcf/model.hpp"
#include "graphcf/params.hpp"
#include "graphcf/trainer.hpp"
#include "io_util.hpp"

namespace graphcf {

namespace {

namespace fs = std::filesystem;

struct Paths {
  fs::path root, dataset, tables, model, eval, analyze;

  explicit Paths(fs::path r) : root(std::move(r)) {
    dataset = root / "dataset";
    tables = root / "tables";
    model = root / "model";
    eval = root / "eval";
    analyze = root / "analyze";
  }
  explicit Paths(const ExperimentConfig& cfg) : Paths(fs::path(cfg.get("out.dir"))) {}
};

Dataset load_split(const Paths& p, const char* which) {
  const fs::path data = p.dataset / (std::string(which) + ".dat");
  if (!fs::exists(data))
    throw Error(Status::State,
                "missing " + data.string() + "; run prepare first");
  return load_dataset(data.string(), (p.dataset / "ids.tsv").string());
}

ModelSpec spec_from(const ExperimentConfig& cfg) {
  ModelSpec spec;
  spec.kind = parse_model_kind(cfg.get("model.kind"));
  spec.factors = cfg.get_int("model.factors", 1, 4096);
  spec.feedback_factors = spec.factors;  // aggregates add onto p_u/q_i
  spec.feedback_width = cfg.get_int("sample.k", 1, 100000);
  const std::string sc = cfg.get("model.scale");
  if (sc == "logistic")
    spec.scale_kind = ScaleKind::Logistic;
  else if (sc == "clamp")
    spec.scale_kind = ScaleKind::Clamp;
  else
    throw Error(Status::Config,
                "config key 'model.scale': expected logistic or clamp, got '" +
                    sc + "'");
  const std::string nm = cfg.get("model.norm");
  if (nm == "sampled")
    spec.norm_mode = NormMode::SampledWidth;
  else if (nm == "degree")
    spec.norm_mode = NormMode::TrueDegree;
  else
    throw Error(Status::Config,
                "config key 'model.norm': expected sampled or degree, got '" +
                    nm + "'");
  spec.mask_pad = cfg.get_bool("model.mask_pad");
  spec.attention.temperature = cfg.get_double("model.temperature");
  spec.attention.hidden = cfg.get_int_list("model.hidden");
  return spec;
}

TrainConfig train_config_from(const ExperimentConfig& cfg) {
  TrainConfig tc;
  tc.model = spec_from(cfg);
  tc.learning_rate = cfg.get_double("train.lr");
  tc.epochs = cfg.get_int("train.epochs", 0, 1000000);
  tc.batch_size = cfg.get_int("train.batch", 1, 1 << 30);
  tc.lambda = cfg.get_double("train.lambda");
  tc.lambda_r = cfg.get_double("train.lambda_r");
  tc.seed = cfg.get_u64("train.seed");
  return tc;
}

// Owns the loaded tables/degrees; views() hands out pointers into it, so keep
// the bundle alive for as long as the views are used.
struct ViewBundle {
  std::optional<FeedbackTable> user1, item1, user2, item2;
  std::optional<std::vector<Id>> user_degrees, item_degrees;

  FeedbackViews views() const {
    FeedbackViews v;
    if (user1) v.user_step1 = &*user1;
    if (item1) v.item_step1 = &*item1;
    if (user2) v.user_step2 = &*user2;
    if (item2) v.item_step2 = &*item2;
    if (user_degrees) v.user_degrees = &*user_degrees;
    if (item_degrees) v.item_degrees = &*item_degrees;
    return v;
  }
};

ViewBundle load_views(const Paths& p, ModelSpec& spec, const Dataset& train,
                      std::ostream& out) {
  ViewBundle b;
  const ModelKind kind = spec.kind;
  auto need = [&](const char* name, const char* hint) {
    const fs::path path = p.tables / name;
    if (!fs::exists(path))
      throw Error(Status::State, "missing " + path.string() + "; " + hint);
    return load_feedback_table(path.string());
  };
  if (has_user_feedback(kind))
    b.user1 = need("user_step1.tbl", "run sample first");
  if (has_item_feedback(kind))
    b.item1 = need("item_step1.tbl", "run sample first");
  if (has_step_two(kind)) {
    b.user2 = need("user_step2.tbl", "run sample with sample.step_two=true");
    b.item2 = need("item_step2.tbl", "run sample with sample.step_two=true");
  }
  if (b.user1 && b.user1->n_entities != train.n_users)
    throw Error(Status::State,
                "user feedback table does not match the train split");
  if (b.item1 && b.item1->n_entities != train.n_items)
    throw Error(Status::State,
                "item feedback table does not match the train split");
  if (b.user1 && b.user1->k != spec.feedback_width) {
    out << "note: sampled tables use k=" << b.user1->k << ", overriding sample.k="
        << spec.feedback_width << "\n";
    spec.feedback_width = b.user1->k;
  }
  if (spec.norm_mode == NormMode::TrueDegree &&
      (user_agg_mode(kind) == AggMode::Uniform ||
       item_agg_mode(kind) == AggMode::Uniform)) {
    InteractionGraph g(train);
    b.user_degrees = g.degrees(Side::User);
    b.item_degrees = g.degrees(Side::Item);
  }
  return b;
}

std::size_t pad_count(const FeedbackTable& t) {
  return static_cast<std::size_t>(
      std::count(t.entries.begin(), t.entries.end(), kPad));
}

}  // namespace

void run_prepare(const ExperimentConfig& cfg, std::ostream& out) {
  const std::string ratings = cfg.get("data.ratings");
  if (ratings.empty())
    throw Error(Status::Config,
                "prepare needs data.ratings to point at a ratings file");
  ColumnSpec columns;
  columns.delimiter = cfg.get("data.delimiter");
  columns.user_col = cfg.get_int("data.user_col", 0, 1024);
  columns.item_col = cfg.get_int("data.item_col", 0, 1024);
  columns.score_col = cfg.get_int("data.score_col", 0, 1024);
  RatingScale scale;
  scale.min_raw = cfg.get_int("data.rating_min");
  scale.max_raw = cfg.get_int("data.rating_max");

  auto in = detail::open_in(ratings);
  const Dataset ds = parse_ratings(in, columns, scale);
  const SplitDataset split =
      split_train_test(ds, cfg.get_double("split.fraction"), cfg.get_u64("split.seed"));

  const Paths p(cfg);
  fs::create_directories(p.dataset);
  save_dataset(split.train, (p.dataset / "train.dat").string());
  save_dataset(split.test, (p.dataset / "test.dat").string());
  save_id_maps(ds, (p.dataset / "ids.tsv").string());
  save_histogram(feedback_histogram(split.train, Side::User),
                 (p.dataset / "hist_user.csv").string());
  save_histogram(feedback_histogram(split.train, Side::Item),
                 (p.dataset / "hist_item.csv").string());
  {
    auto s = detail::open_out((p.dataset / "split.txt").string());
    s << "records " << ds.records.size() << "\nusers " << ds.n_users
      << "\nitems " << ds.n_items << "\ntrain " << split.train.records.size()
      << "\ntest " << split.test.records.size() << "\npromoted "
      << split.promoted << "\ntrain_fraction "
      << detail::fmt(split.achieved_fraction) << "\n";
    if (!s) throw Error(Status::Io, "write failed: split.txt");
  }
  out << "prepared " << ds.records.size() << " records (" << ds.n_users
      << " users, " << ds.n_items << " items) -> train "
      << split.train.records.size() << ", test " << split.test.records.size()
      << " (promoted " << split.promoted << ")\n";
}

void run_sample(const ExperimentConfig& cfg, std::ostream& out) {
  const Paths p(cfg);
  const Dataset train = load_split(p, "train");
  const InteractionGraph g(train);
  SamplePolicy policy;
  policy.kind = parse_policy(cfg.get("sample.policy"));
  policy.k = cfg.get_int("sample.k", 1, 10000);
  policy.seed = cfg.get_u64("sample.seed");
  fs::create_directories(p.tables);

  FeedbackTable user1, item1;
  if (policy.kind == SamplePolicy::Kind::Random) {
    user1 = sample_random(g, Side::User, policy);
    item1 = sample_random(g, Side::Item, policy);
  } else {
    TrainConfig pre;
    pre.model.kind = ModelKind::MF;
    pre.model.factors = cfg.get_int("pretrain.factors", 1, 4096);
    pre.model.feedback_factors = pre.model.factors;
    pre.learning_rate = cfg.get_double("pretrain.lr");
    pre.epochs = cfg.get_int("pretrain.epochs", 0, 100000);
    pre.batch_size = cfg.get_int("pretrain.batch", 1, 1 << 30);
    pre.lambda = cfg.get_double("pretrain.lambda");
    pre.seed = policy.seed;
    out << "pretraining the relevance scorer (mf, " << pre.epochs
        << " epochs)\n";
    const ModelParams mf = pretrain_relevance_embeddings(train, pre);
    save_params(mf, (p.tables / "relevance_mf.bin").string());
    user1 = sample_relevance(g, Side::User, mf, policy.k);
    item1 = sample_relevance(g, Side::Item, mf, policy.k);
  }
  save_feedback_table(user1, (p.tables / "user_step1.tbl").string());
  save_feedback_table(item1, (p.tables / "item_step1.tbl").string());
  out << "sampled step-one tables (" << policy_name(policy.kind)
      << ", k=" << policy.k << "): pads " << pad_count(user1) << "/"
      << user1.entries.size() << " user, " << pad_count(item1) << "/"
      << item1.entries.size() << " item\n";

  if (cfg.get_bool("sample.step_two")) {
    std::vector<std::vector<Id>> ucand(static_cast<std::size_t>(train.n_users));
    std::vector<std::vector<Id>> icand(static_cast<std::size_t>(train.n_items));
    for (Id u = 0; u < train.n_users; ++u)
      ucand[static_cast<std::size_t>(u)] = step_two_user_candidates(g, u, item1);
    for (Id i = 0; i < train.n_items; ++i)
      icand[static_cast<std::size_t>(i)] = step_two_item_candidates(g, i, user1);
    const FeedbackTable user2 =
        sample_step_two(Side::User, ucand, policy.k, policy.seed);
    const FeedbackTable item2 =
        sample_step_two(Side::Item, icand, policy.k, policy.seed);
    save_feedback_table(user2, (p.tables / "user_step2.tbl").string());
    save_feedback_table(item2, (p.tables / "item_step2.tbl").string());
    out << "sampled step-two tables: pads " << pad_count(user2) << "/"
        << user2.entries.size() << " user, " << pad_count(item2) << "/"
        << item2.entries.size() << " item\n";
  }
}

void run_train(const ExperimentConfig& cfg, std::ostream& out) {
  const Paths p(cfg);
  const Dataset train = load_split(p, "train");
  const Dataset test = load_split(p, "test");
  TrainConfig tc = train_config_from(cfg);
  const ViewBundle bundle = load_views(p, tc.model, train, out);
  const FeedbackViews views = bundle.views();
  fs::create_directories(p.model);
  const int checkpoint_every = cfg.get_int("train.checkpoint_every", 0, 1 << 30);

  out << "training " << model_kind_name(tc.model.kind)
      << " (K=" << tc.model.factors << ", lr=" << detail::fmt(tc.learning_rate)
      << ", epochs=" << tc.epochs << ", batch=" << tc.batch_size << ")\n";
  const TrainResult result = train_model(
      train, &test, views, tc,
      [&](const EpochStats& st, const ModelParams& params) {
        out << "epoch " << st.epoch << " objective "
            << detail::fmt(st.objective) << " train_rmse "
            << detail::fmt(st.train_rmse) << " test_rmse "
            << detail::fmt(st.test_rmse) << " (" << detail::fmt(st.seconds)
            << "s)\n";
        if (checkpoint_every > 0 && st.epoch % checkpoint_every == 0)
          save_params(params,
                      (p.model / ("checkpoint_" + std::to_string(st.epoch) +
                                  ".bin"))
                          .string());
      });
  save_params(result.params, (p.model / "model.bin").string());
  save_curve(result.curve, (p.model / "curve.csv").string());
  if (!result.curve.empty())
    out << "final test_rmse " << detail::fmt(result.curve.back().test_rmse)
        << "\n";
}

void run_evaluate(const ExperimentConfig& cfg, std::ostream& out) {
  const Paths p(cfg);
  const Dataset train = load_split(p, "train");
  const Dataset test = load_split(p, "test");
  const fs::path model_path = p.model / "model.bin";
  if (!fs::exists(model_path))
    throw Error(Status::State,
                "missing " + model_path.string() + "; run train first");
  ModelParams params = load_params(model_path.string());
  const ViewBundle bundle = load_views(p, params.spec, train, out);
  const FeedbackViews views = bundle.views();
  fs::create_directories(p.eval);

  const double test_rmse = rmse(params, views, test.records);
  const double train_rmse = rmse(params, views, train.records);

  const std::vector<int> edge_ints = cfg.get_int_list("eval.slice_edges");
  const std::vector<Id> edges(edge_ints.begin(), edge_ints.end());
  const InteractionGraph g(train);
  const std::vector<Id> udeg = g.degrees(Side::User);
  const std::vector<Id> ideg = g.degrees(Side::Item);
  const auto uslices =
      sparse_slice_rmse(params, views, test.records, udeg, Side::User, edges);
  const auto islices =
      sparse_slice_rmse(params, views, test.records, ideg, Side::Item, edges);
  save_slices(uslices, (p.eval / "slices_user.csv").string());
  save_slices(islices, (p.eval / "slices_item.csv").string());
  {
    auto s = detail::open_out((p.eval / "summary.txt").string());
    s << "model " << model_kind_name(params.spec.kind) << "\ntrain_records "
      << train.records.size() << "\ntest_records " << test.records.size()
      << "\ntrain_rmse " << detail::fmt(train_rmse) << "\ntest_rmse "
      << detail::fmt(test_rmse) << "\n";
    if (!s) throw Error(Status::Io, "write failed: summary.txt");
  }
  out << "test_rmse " << detail::fmt(test_rmse) << " train_rmse "
      << detail::fmt(train_rmse) << "\n";
  for (const DegreeSlice& s : uslices) {
    out << "user degree [" << s.lo << ", ";
    if (s.hi >= 0)
      out << s.hi << ")";
    else
      out << "inf)";
    out << " n=" << s.count << " rmse " << detail::fmt(s.rmse) << "\n";
  }
}

namespace {

void dump_attention_pairs(const ModelParams& params, const InteractionGraph& g,
                          const FeedbackTable& table, Side side,
                          std::ostream& out) {
  for (Id entity = 0; entity < table.n_entities; ++entity) {
    const std::span<const Id> row = table.row(entity);
    if (std::all_of(row.begin(), row.end(), [](Id v) { return v == kPad; }))
      continue;
    const std::vector<double> attn =
        attention_scores(params, side, 1, entity, row);
    for (std::size_t s = 0; s < row.size(); ++s) {
      if (row[s] == kPad) continue;
      const std::optional<int> raw = g.edge_raw(side, entity, row[s]);
      out << side_name(side) << ',' << entity << ',' << row[s] << ','
          << (raw ? *raw : 0) << ',' << detail::fmt(attn[s]) << '\n';
    }
  }
}

}  // namespace

void run_analyze(const ExperimentConfig& cfg, std::ostream& out) {
  const Paths p(cfg);
  fs::create_directories(p.analyze);
  bool did_anything = false;

  const std::string compare = cfg.get("analyze.compare");
  if (!compare.empty()) {
    std::vector<NamedCurve> curves;
    std::size_t pos = 0;
    while (pos <= compare.size()) {
      const std::size_t comma = compare.find(',', pos);
      const std::size_t end = comma == std::string::npos ? compare.size() : comma;
      const std::string part{
          detail::trim(std::string_view(compare).substr(pos, end - pos))};
      if (!part.empty()) {
        const std::size_t eq = part.find('=');
        if (eq == std::string::npos)
          throw Error(Status::Config,
                      "analyze.compare entries must look like name=curve.csv");
        curves.push_back(
            NamedCurve{part.substr(0, eq), load_curve(part.substr(eq + 1))});
      }
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    save_curve_comparison(curves, (p.analyze / "compare.csv").string());
    out << "compared " << curves.size() << " learning curves\n";
    if (curves.size() >= 2) {
      auto conv = detail::open_out((p.analyze / "convergence.txt").string());
      for (std::size_t n = 1; n < curves.size(); ++n) {
        const ConvergenceSummary s =
            compare_learning_curves(curves[0].curve, curves[n].curve);
        const std::string line = curves[n].name + " settles at epoch " +
                                 std::to_string(s.epoch_b) + ", " +
                                 curves[0].name + " at epoch " +
                                 std::to_string(s.epoch_a) + " (ratio " +
                                 detail::fmt(s.ratio) + ")";
        conv << line << '\n';
        out << line << "\n";
      }
      if (!conv) throw Error(Status::Io, "write failed: convergence.txt");
    }
    did_anything = true;
  }

  std::optional<Dataset> train;
  std::optional<InteractionGraph> graph;
  auto need_graph = [&]() -> const InteractionGraph& {
    if (!train) {
      train = load_split(p, "train");
      graph.emplace(*train);
    }
    return *graph;
  };

  if (cfg.get_bool("analyze.dump_adjacency")) {
    const InteractionGraph& g = need_graph();
    save_adjacency(g, Side::User, (p.analyze / "user_adjacency.tsv").string());
    save_adjacency(g, Side::Item, (p.analyze / "item_adjacency.tsv").string());
    out << "dumped adjacency lists\n";
    did_anything = true;
  }

  const fs::path model_path = p.model / "model.bin";
  if (fs::exists(model_path)) {
    ModelParams params = load_params(model_path.string());
    const bool user_attn =
        user_agg_mode(params.spec.kind) == AggMode::Attentive;
    const bool item_attn =
        item_agg_mode(params.spec.kind) == AggMode::Attentive;
    if (user_attn || item_attn) {
      const InteractionGraph& g = need_graph();
      ViewBundle bundle = load_views(p, params.spec, *train, out);
      std::map<int, AttnBucket> ubuckets, ibuckets;
      if (user_attn)
        ubuckets = attention_by_rating(params, g, *bundle.user1, Side::User);
      if (item_attn)
        ibuckets = attention_by_rating(params, g, *bundle.item1, Side::Item);
      save_attention_report(ubuckets, ibuckets,
                            (p.analyze / "attention_by_rating.csv").string());
      for (const auto& [raw, bucket] : merge_attention(ubuckets, ibuckets))
        out << "attention on rating " << raw << ": mean "
            << detail::fmt(bucket.mean()) << " over " << bucket.count
            << " pairs\n";
      auto pairs =
          detail::open_out((p.analyze / "attention_pairs.csv").string());
      pairs << "side,entity,feedback,raw_rating,attention\n";
      if (user_attn)
        dump_attention_pairs(params, g, *bundle.user1, Side::User, pairs);
      if (item_attn)
        dump_attention_pairs(params, g, *bundle.item1, Side::Item, pairs);
      if (!pairs) throw Error(Status::Io, "write failed: attention_pairs.csv");
      did_anything = true;
    } else if (!did_anything &&
               cfg.get_double_list("analyze.temperatures").empty()) {
      throw Error(Status::Config,
                  "model kind " + std::string(model_kind_name(params.spec.kind)) +
                      " has no attention to analyze");
    }
  }

  // The sweep retrains the configured model once per temperature so each
  // point reflects what that temperature actually learns, not a post-hoc
  // rescore of one snapshot.
  const std::vector<double> temps = cfg.get_double_list("analyze.temperatures");
  if (!temps.empty()) {
    TrainConfig tc = train_config_from(cfg);
    if (!has_attention(tc.model.kind))
      throw Error(Status::Config,
                  "analyze.temperatures needs an attentive model.kind, not " +
                      std::string(model_kind_name(tc.model.kind)));
    const InteractionGraph& g = need_graph();
    const Dataset test = load_split(p, "test");
    ViewBundle bundle = load_views(p, tc.model, *train, out);
    const FeedbackViews views = bundle.views();
    auto sweep =
        detail::open_out((p.analyze / "temperature_sweep.csv").string());
    sweep << "temperature,side,raw_rating,count,mean_attention\n";
    for (const double t : temps) {
      TrainConfig point = tc;
      point.model.attention.temperature = t;
      out << "sweep t=" << detail::fmt(t) << ": training "
          << model_kind_name(point.model.kind) << "\n";
      const TrainResult result = train_model(*train, &test, views, point);
      save_curve(result.curve,
                 (p.analyze / ("sweep_t" + detail::fmt(t) + ".csv")).string());
      std::map<int, AttnBucket> ubuckets, ibuckets;
      if (user_agg_mode(point.model.kind) == AggMode::Attentive)
        ubuckets =
            attention_by_rating(result.params, g, *bundle.user1, Side::User);
      if (item_agg_mode(point.model.kind) == AggMode::Attentive)
        ibuckets =
            attention_by_rating(result.params, g, *bundle.item1, Side::Item);
      auto emit = [&](const char* side, const std::map<int, AttnBucket>& m) {
        for (const auto& [raw, bucket] : m)
          sweep << detail::fmt(t) << ',' << side << ',' << raw << ','
                << bucket.count << ',' << detail::fmt(bucket.mean()) << '\n';
      };
      emit("both", merge_attention(ubuckets, ibuckets));
      emit("user", ubuckets);
      emit("item", ibuckets);
    }
    if (!sweep) throw Error(Status::Io, "write failed: temperature_sweep.csv");
    out << "swept " << temps.size() << " temperatures\n";
    did_anything = true;
  }

  if (!did_anything)
    throw Error(Status::State,
                "nothing to analyze: no trained model under " +
                    p.model.string() +
                    ", no analyze.compare, no analyze.temperatures");
}

namespace {

struct GradcheckInstance {
  Dataset data;
  ViewBundle bundle;
  ModelParams params;
};

GradcheckInstance make_gradcheck_instance(const ModelSpec& spec, Id n_users,
                                          Id n_items, int n_records, int k,
                                          std::uint64_t seed) {
  if (static_cast<std::int64_t>(n_records) >
      static_cast<std::int64_t>(n_users) * n_items)
    throw Error(Status::Config,
                "gradcheck.records exceeds the number of distinct pairs");
  GradcheckInstance inst;
  Dataset& ds = inst.data;
  ds.n_users = n_users;
  ds.n_items = n_items;
  std::mt19937_64 rng(mix_seed(seed, /*stream=*/0x6c4d));
  std::set<std::pair<Id, Id>> seen;
  while (ds.records.size() < static_cast<std::size_t>(n_records)) {
    RatingRecord rec;
    rec.user = static_cast<Id>(bounded(rng, static_cast<std::uint64_t>(n_users)));
    rec.item = static_cast<Id>(bounded(rng, static_cast<std::uint64_t>(n_items)));
    if (!seen.insert({rec.user, rec.item}).second) continue;
    rec.raw = ds.scale.min_raw +
              static_cast<int>(bounded(
                  rng, static_cast<std::uint64_t>(ds.scale.max_raw -
                                                  ds.scale.min_raw + 1)));
    rec.score = normalize_score(rec.raw, ds.scale);
    ds.records.push_back(rec);
  }

  const InteractionGraph g(ds);
  SamplePolicy policy;
  policy.k = k;
  policy.seed = seed;
  if (has_user_feedback(spec.kind))
    inst.bundle.user1 = sample_random(g, Side::User, policy);
  if (has_item_feedback(spec.kind))
    inst.bundle.item1 = sample_random(g, Side::Item, policy);
  if (has_step_two(spec.kind)) {
    std::vector<std::vector<Id>> ucand(static_cast<std::size_t>(n_users));
    std::vector<std::vector<Id>> icand(static_cast<std::size_t>(n_items));
    for (Id u = 0; u < n_users; ++u)
      ucand[static_cast<std::size_t>(u)] =
          step_two_user_candidates(g, u, *inst.bundle.item1);
    for (Id i = 0; i < n_items; ++i)
      icand[static_cast<std::size_t>(i)] =
          step_two_item_candidates(g, i, *inst.bundle.user1);
    inst.bundle.user2 = sample_step_two(Side::User, ucand, k, seed);
    inst.bundle.item2 = sample_step_two(Side::Item, icand, k, seed);
  }
  if (spec.norm_mode == NormMode::TrueDegree) {
    inst.bundle.user_degrees = g.degrees(Side::User);
    inst.bundle.item_degrees = g.degrees(Side::Item);
  }

  inst.params = init_params(spec, n_users, n_items, seed);
  // The near-zero production init makes most gradients comparable to
  // finite-difference noise; draw wider for a meaningful comparison.
  randomize_params(inst.params, 0.5, seed);
  return inst;
}

}  // namespace

void run_gradcheck(const ExperimentConfig& cfg, std::ostream& out) {
  const Id n_users = cfg.get_int("gradcheck.users", 2, 100000);
  const Id n_items = cfg.get_int("gradcheck.items", 2, 100000);
  const int n_records = cfg.get_int("gradcheck.records", 1, 1000000);
  const int k = cfg.get_int("gradcheck.k", 1, 1000);
  const double eps = cfg.get_double("gradcheck.eps");
  const double tol = cfg.get_double("gradcheck.tolerance");
  ModelSpec spec = spec_from(cfg);
  spec.feedback_width = k;
  TrainConfig tc = train_config_from(cfg);
  tc.model = spec;

  std::uint64_t seed = cfg.get_u64("gradcheck.seed");
  FiniteDiffReport report;
  for (int attempt = 0;; ++attempt, ++seed) {
    const GradcheckInstance inst =
        make_gradcheck_instance(spec, n_users, n_items, n_records, k, seed);
    report = finite_diff_check(inst.params, inst.data.records,
                               inst.bundle.views(), tc, eps);
    // Near a ReLU kink (or a clamp edge) the two-sided difference straddles
    // the non-differentiable point; redraw rather than report noise.
    if (report.min_kink_margin > 100.0 * eps || attempt >= 4) break;
    out << "instance with seed " << seed << " sits " << detail::fmt(report.min_kink_margin)
        << " from a kink; redrawing\n";
  }

  out << "gradient check: " << model_kind_name(spec.kind) << ", "
      << n_records << " records, eps " << detail::fmt(eps) << ", seed "
      << seed << "\n";
  for (const BlockCheck& b : report.blocks)
    out << "  " << b.block << ": max rel err " << detail::fmt(b.max_rel_err)
        << " over " << b.checked << " coordinates\n";
  out << "checked " << report.checked << " coordinates, max rel err "
      << detail::fmt(report.max_rel_err) << "\n";
  if (report.max_rel_err > tol)
    throw Error(Status::Numeric,
                "gradient check failed: max rel err " +
                    detail::fmt(report.max_rel_err) + " > tolerance " +
                    detail::fmt(tol));
  out << "PASS (tolerance " << detail::fmt(tol) << ")\n";
}

void run_command(const std::string& command, const ExperimentConfig& cfg,
                 std::ostream& out) {
  if (command == "prepare") return run_prepare(cfg, out);
  if (command == "sample") return run_sample(cfg, out);
  if (command == "train") return run_train(cfg, out);
  if (command == "evaluate") return run_evaluate(cfg, out);
  if (command == "analyze") return run_analyze(cfg, out);
  if (command == "gradcheck") return run_gradcheck(cfg, out);
  throw Error(Status::InvalidArgument, "unknown command '" + command +
                                           "' (valid: " + command_list() + ")");
}

const char* command_list() {
  return "prepare, sample, train, evaluate, analyze, gradcheck";
}

Predictor Predictor::open(const std::string& out_dir) {
  const Paths p{fs::path(out_dir)};
  const fs::path model_path = p.model / "model.bin";
  if (!fs::exists(model_path))
    throw Error(Status::State,
                "missing " + model_path.string() + "; run train first");
  Predictor pred;
  pred.params_ = load_params(model_path.string());
  const Dataset train = load_split(p, "train");
  std::ostringstream sink;
  ViewBundle bundle = load_views(p, pred.params_.spec, train, sink);
  pred.user1_ = std::move(bundle.user1);
  pred.item1_ = std::move(bundle.item1);
  pred.user2_ = std::move(bundle.user2);
  pred.item2_ = std::move(bundle.item2);
  pred.user_degrees_ = std::move(bundle.user_degrees);
  pred.item_degrees_ = std::move(bundle.item_degrees);
  return pred;
}

double Predictor::predict(Id user, Id item) const {
  FeedbackViews v;
  if (user1_) v.user_step1 = &*user1_;
  if (item1_) v.item_step1 = &*item1_;
  if (user2_) v.user_step2 = &*user2_;
  if (item2_) v.item_step2 = &*item2_;
  if (user_degrees_) v.user_degrees = &*user_degrees_;
  if (item_degrees_) v.item_degrees = &*item_degrees_;
  return graphcf::predict(params_, v, user, item);
}

}  // namespace graphcf
