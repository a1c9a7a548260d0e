#include "graphcf/feedback.hpp"

#include <algorithm>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "graphcf/model.hpp"
#include "graphcf/trainer.hpp"
#include "io_util.hpp"

namespace graphcf {

SamplePolicy::Kind parse_policy(const std::string& name) {
  if (name == "random") return SamplePolicy::Kind::Random;
  if (name == "relevance") return SamplePolicy::Kind::Relevance;
  throw Error(Status::Config,
              "unknown sampling policy '" + name + "' (valid: random, relevance)");
}

const char* policy_name(SamplePolicy::Kind kind) {
  return kind == SamplePolicy::Kind::Random ? "random" : "relevance";
}

namespace {

FeedbackTable make_table(Side side, int step, int k, Id n_entities) {
  if (k <= 0) throw Error(Status::Config, "feedback width k must be positive");
  FeedbackTable t;
  t.side = side;
  t.step = step;
  t.k = k;
  t.n_entities = n_entities;
  t.entries.assign(static_cast<std::size_t>(n_entities) * k, kPad);
  return t;
}

// One generator per (seed, side, entity): rows never depend on the order
// entities are visited in.
std::mt19937_64 entity_rng(std::uint64_t seed, Side side, int step, Id entity) {
  const std::uint64_t tag =
      (side == Side::User ? 0x55ULL : 0x49ULL) | (static_cast<std::uint64_t>(step) << 8);
  return std::mt19937_64(
      mix_seed(seed, (tag << 48) ^ static_cast<std::uint64_t>(entity)));
}

}  // namespace

FeedbackTable sample_random(const InteractionGraph& g, Side side,
                            const SamplePolicy& policy) {
  const Id n = side == Side::User ? g.n_users() : g.n_items();
  FeedbackTable table = make_table(side, 1, policy.k, n);
  for (Id entity = 0; entity < n; ++entity) {
    std::span<const Neighbor> nbrs = g.neighbors(side, entity);
    if (nbrs.empty()) continue;  // stays all-pad
    std::mt19937_64 rng = entity_rng(policy.seed, side, 1, entity);
    std::span<Id> row = table.row(entity);
    for (Id& slot : row)
      slot = nbrs[static_cast<std::size_t>(bounded(rng, nbrs.size()))].id;
  }
  return table;
}

ModelParams pretrain_relevance_embeddings(const Dataset& train,
                                          const TrainConfig& cfg) {
  if (cfg.model.kind != ModelKind::MF)
    throw Error(Status::Config,
                "relevance pretraining expects a plain mf config, got " +
                    std::string(model_kind_name(cfg.model.kind)));
  return train_model(train, nullptr, FeedbackViews{}, cfg).params;
}

FeedbackTable sample_relevance(const InteractionGraph& g, Side side,
                               const ModelParams& mf, int k) {
  const Id n = side == Side::User ? g.n_users() : g.n_items();
  FeedbackTable table = make_table(side, 1, k, n);
  std::vector<std::pair<double, Id>> scored;
  for (Id entity = 0; entity < n; ++entity) {
    std::span<const Neighbor> nbrs = g.neighbors(side, entity);
    if (nbrs.empty()) continue;
    scored.clear();
    for (const Neighbor& nb : nbrs) {
      const double s = side == Side::User ? predict_mf(mf, entity, nb.id)
                                          : predict_mf(mf, nb.id, entity);
      scored.emplace_back(s, nb.id);
    }
    // Highest score first; equal scores keep the smaller id first.
    std::sort(scored.begin(), scored.end(),
              [](const std::pair<double, Id>& a, const std::pair<double, Id>& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second < b.second;
              });
    std::span<Id> row = table.row(entity);
    const std::size_t take =
        std::min(scored.size(), static_cast<std::size_t>(k));
    for (std::size_t s = 0; s < take; ++s) row[s] = scored[s].second;
  }
  return table;
}

FeedbackTable sample_step_two(Side side,
                              const std::vector<std::vector<Id>>& candidates,
                              int k, std::uint64_t seed) {
  const Id n = static_cast<Id>(candidates.size());
  FeedbackTable table = make_table(side, 2, k, n);
  std::vector<Id> pool;
  for (Id entity = 0; entity < n; ++entity) {
    const std::vector<Id>& cand = candidates[static_cast<std::size_t>(entity)];
    std::span<Id> row = table.row(entity);
    if (cand.size() <= static_cast<std::size_t>(k)) {
      std::copy(cand.begin(), cand.end(), row.begin());
      continue;
    }
    // k draws without replacement: a partial Fisher-Yates over the pool.
    pool.assign(cand.begin(), cand.end());
    std::mt19937_64 rng = entity_rng(seed, side, 2, entity);
    for (int s = 0; s < k; ++s) {
      const std::size_t j =
          s + static_cast<std::size_t>(bounded(rng, pool.size() - s));
      std::swap(pool[static_cast<std::size_t>(s)], pool[j]);
      row[s] = pool[static_cast<std::size_t>(s)];
    }
  }
  return table;
}

void save_feedback_table(const FeedbackTable& table, const std::string& path) {
  auto out = detail::open_out(path);
  out << "graphcf-feedback 1 " << side_name(table.side) << ' ' << table.step
      << ' ' << table.k << ' ' << table.n_entities << '\n';
  for (Id entity = 0; entity < table.n_entities; ++entity) {
    out << entity;
    for (Id slot : table.row(entity)) out << ',' << slot;
    out << '\n';
  }
  if (!out) throw Error(Status::Io, "write failed: " + path);
}

FeedbackTable load_feedback_table(const std::string& path) {
  auto in = detail::open_in(path);
  std::string header;
  if (!std::getline(in, header))
    throw Error(Status::Parse, "empty feedback table: " + path);
  std::istringstream hs(header);
  std::string magic, version, side;
  int step = 0, k = 0;
  Id n = 0;
  hs >> magic >> version >> side >> step >> k >> n;
  if (!hs || magic != "graphcf-feedback" || version != "1" ||
      (side != "user" && side != "item"))
    throw Error(Status::Parse, "not a feedback table: " + path);

  FeedbackTable table =
      make_table(side == "user" ? Side::User : Side::Item, step, k, n);
  std::string line;
  Id entity = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (entity >= n)
      throw Error(Status::Parse, "too many feedback rows in " + path);
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
    if (fields.size() != static_cast<std::size_t>(k) + 1)
      throw Error(Status::Parse, "feedback row with wrong width in " + path);
    Id row_id = 0;
    if (!detail::parse_int(fields[0], row_id) || row_id != entity)
      throw Error(Status::Parse, "feedback rows out of order in " + path);
    std::span<Id> row = table.row(entity);
    for (int s = 0; s < k; ++s) {
      Id v = 0;
      if (!detail::parse_int(fields[static_cast<std::size_t>(s) + 1], v) ||
          v < kPad)
        throw Error(Status::Parse, "bad feedback id in " + path);
      row[s] = v;
    }
    ++entity;
  }
  if (entity != n)
    throw Error(Status::Parse, "missing feedback rows in " + path);
  return table;
}

}  // namespace graphcf
