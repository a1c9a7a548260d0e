#include "graphcf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <random>
#include <sstream>
#include <unordered_set>

#include "io_util.hpp"

namespace graphcf {

double normalize_score(int raw, const RatingScale& scale) {
  if (scale.max_raw <= scale.min_raw)
    throw Error(Status::Config, "rating scale must satisfy max_raw > min_raw");
  if (!scale.contains(raw))
    throw Error(Status::InvalidArgument,
                "raw score " + std::to_string(raw) + " outside scale [" +
                    std::to_string(scale.min_raw) + ", " +
                    std::to_string(scale.max_raw) + "]");
  return static_cast<double>(raw - scale.min_raw) /
         static_cast<double>(scale.max_raw - scale.min_raw);
}

namespace {

std::uint64_t pair_key(Id u, Id i) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) |
         static_cast<std::uint32_t>(i);
}

Id intern(const std::string& external, std::unordered_map<std::string, Id>& index,
          std::vector<std::string>& ids) {
  auto [it, inserted] = index.emplace(external, static_cast<Id>(ids.size()));
  if (inserted) ids.push_back(external);
  return it->second;
}

}  // namespace

Dataset parse_ratings(std::istream& in, const ColumnSpec& spec,
                      const RatingScale& scale) {
  if (spec.delimiter.empty())
    throw Error(Status::Config, "column spec needs a non-empty delimiter");
  const int max_col =
      std::max({spec.user_col, spec.item_col, spec.score_col});
  if (std::min({spec.user_col, spec.item_col, spec.score_col}) < 0)
    throw Error(Status::Config, "column indices must be non-negative");

  Dataset ds;
  ds.scale = scale;
  std::unordered_map<std::uint64_t, std::size_t> seen;

  std::string line;
  std::vector<std::string_view> fields;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view rest = detail::trim(line);
    if (rest.empty()) continue;

    fields.clear();
    while (true) {
      std::size_t pos = rest.find(spec.delimiter);
      if (pos == std::string_view::npos) {
        fields.push_back(rest);
        break;
      }
      fields.push_back(rest.substr(0, pos));
      rest.remove_prefix(pos + spec.delimiter.size());
    }
    if (static_cast<int>(fields.size()) <= max_col)
      throw Error(Status::Parse, "line " + std::to_string(line_no) +
                                     ": expected at least " +
                                     std::to_string(max_col + 1) + " fields, got " +
                                     std::to_string(fields.size()));

    int raw = 0;
    std::string_view raw_field = detail::trim(fields[spec.score_col]);
    if (!detail::parse_int(raw_field, raw))
      throw Error(Status::Parse, "line " + std::to_string(line_no) +
                                     ": bad score field '" +
                                     std::string(raw_field) + "'");
    if (!scale.contains(raw))
      throw Error(Status::InvalidArgument,
                  "line " + std::to_string(line_no) + ": raw score " +
                      std::to_string(raw) + " outside scale [" +
                      std::to_string(scale.min_raw) + ", " +
                      std::to_string(scale.max_raw) + "]");

    Id u = intern(std::string(detail::trim(fields[spec.user_col])),
                  ds.user_index, ds.user_ids);
    Id i = intern(std::string(detail::trim(fields[spec.item_col])),
                  ds.item_index, ds.item_ids);

    auto [it, inserted] = seen.emplace(pair_key(u, i), ds.records.size());
    double score = normalize_score(raw, scale);
    if (inserted) {
      ds.records.push_back({u, i, raw, score});
    } else {
      // duplicate pair: the latest rating wins
      ds.records[it->second].raw = raw;
      ds.records[it->second].score = score;
    }
  }

  if (ds.records.empty()) throw Error(Status::Parse, "no records");
  ds.n_users = static_cast<Id>(ds.user_ids.size());
  ds.n_items = static_cast<Id>(ds.item_ids.size());
  return ds;
}

SplitDataset split_train_test(const Dataset& ds, double train_fraction,
                              std::uint64_t seed) {
  if (ds.records.empty())
    throw Error(Status::InvalidArgument, "cannot split an empty dataset");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error(Status::InvalidArgument,
                "train fraction must lie strictly between 0 and 1");

  const std::size_t n = ds.records.size();
  std::vector<std::uint32_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
  std::mt19937_64 rng(mix_seed(seed, /*stream=*/0x5917));
  shuffle_indices(order, rng);

  auto n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n);

  std::vector<char> in_train(n, 0);
  for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = 1;

  std::vector<char> user_covered(ds.n_users, 0);
  std::vector<char> item_covered(ds.n_items, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!in_train[i]) continue;
    user_covered[ds.records[i].user] = 1;
    item_covered[ds.records[i].item] = 1;
  }

  // Promote test records whose user or item is not yet covered. Train only
  // grows, so one forward pass leaves every remaining test id covered.
  std::int64_t promoted = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (in_train[i]) continue;
    const RatingRecord& r = ds.records[i];
    if (!user_covered[r.user] || !item_covered[r.item]) {
      in_train[i] = 1;
      user_covered[r.user] = 1;
      item_covered[r.item] = 1;
      ++promoted;
    }
  }

  SplitDataset split;
  split.promoted = promoted;
  for (Dataset* part : {&split.train, &split.test}) {
    part->n_users = ds.n_users;
    part->n_items = ds.n_items;
    part->scale = ds.scale;
    part->user_ids = ds.user_ids;
    part->item_ids = ds.item_ids;
    part->user_index = ds.user_index;
    part->item_index = ds.item_index;
  }
  for (std::size_t i = 0; i < n; ++i) {
    (in_train[i] ? split.train : split.test).records.push_back(ds.records[i]);
  }
  split.achieved_fraction =
      static_cast<double>(split.train.records.size()) / static_cast<double>(n);
  return split;
}

std::map<int, std::int64_t> feedback_histogram(const Dataset& ds, Side side) {
  const Id n = side == Side::User ? ds.n_users : ds.n_items;
  std::vector<std::int64_t> degree(n, 0);
  for (const RatingRecord& r : ds.records)
    ++degree[side == Side::User ? r.user : r.item];

  std::map<int, std::int64_t> hist;
  for (Id e = 0; e < n; ++e) ++hist[static_cast<int>(degree[e])];
  return hist;
}

// --- persistence -------------------------------------------------------------

namespace {
constexpr const char* kDatasetMagic = "graphcf-dataset 1";
constexpr const char* kIdsMagic = "graphcf-ids 1";
}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
  auto out = detail::open_out(path);
  out << kDatasetMagic << '\n'
      << ds.n_users << ' ' << ds.n_items << ' ' << ds.scale.min_raw << ' '
      << ds.scale.max_raw << ' ' << ds.records.size() << '\n';
  for (const RatingRecord& r : ds.records)
    out << r.user << ' ' << r.item << ' ' << r.raw << '\n';
  if (!out) throw Error(Status::Io, "write failed: " + path);
}

void save_id_maps(const Dataset& ds, const std::string& path) {
  auto out = detail::open_out(path);
  out << kIdsMagic << '\n';
  for (Id u = 0; u < ds.n_users; ++u)
    out << "u\t" << u << '\t' << ds.user_ids[u] << '\n';
  for (Id i = 0; i < ds.n_items; ++i)
    out << "i\t" << i << '\t' << ds.item_ids[i] << '\n';
  if (!out) throw Error(Status::Io, "write failed: " + path);
}

Dataset load_dataset(const std::string& path, const std::string& id_map_path) {
  auto in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kDatasetMagic)
    throw Error(Status::Parse, "not a dataset snapshot: " + path);

  Dataset ds;
  std::size_t n_records = 0;
  {
    if (!std::getline(in, line))
      throw Error(Status::Parse, "truncated dataset header: " + path);
    std::istringstream hdr{line};
    hdr >> ds.n_users >> ds.n_items >> ds.scale.min_raw >> ds.scale.max_raw >>
        n_records;
    if (!hdr) throw Error(Status::Parse, "bad dataset header: " + path);
  }
  ds.records.reserve(n_records);
  for (std::size_t k = 0; k < n_records; ++k) {
    RatingRecord r;
    if (!(in >> r.user >> r.item >> r.raw))
      throw Error(Status::Parse, "truncated dataset snapshot: " + path);
    if (r.user < 0 || r.user >= ds.n_users || r.item < 0 || r.item >= ds.n_items)
      throw Error(Status::Parse, "id out of range in snapshot: " + path);
    r.score = normalize_score(r.raw, ds.scale);
    ds.records.push_back(r);
  }

  auto ids = detail::open_in(id_map_path);
  if (!std::getline(ids, line) || detail::trim(line) != kIdsMagic)
    throw Error(Status::Parse, "not an id-map sidecar: " + id_map_path);
  ds.user_ids.resize(ds.n_users);
  ds.item_ids.resize(ds.n_items);
  std::int64_t seen_users = 0, seen_items = 0;
  while (std::getline(ids, line)) {
    std::string_view v = detail::trim(line);
    if (v.empty()) continue;
    std::size_t t1 = v.find('\t');
    std::size_t t2 = v.find('\t', t1 == std::string_view::npos ? t1 : t1 + 1);
    Id dense = -1;
    if (t1 == std::string_view::npos || t2 == std::string_view::npos ||
        !detail::parse_int(v.substr(t1 + 1, t2 - t1 - 1), dense))
      throw Error(Status::Parse, "bad id-map line: " + std::string(v));
    std::string external(v.substr(t2 + 1));
    if (v[0] == 'u' && dense >= 0 && dense < ds.n_users) {
      ds.user_ids[dense] = external;
      ++seen_users;
    } else if (v[0] == 'i' && dense >= 0 && dense < ds.n_items) {
      ds.item_ids[dense] = external;
      ++seen_items;
    } else {
      throw Error(Status::Parse, "bad id-map line: " + std::string(v));
    }
  }
  if (seen_users != ds.n_users || seen_items != ds.n_items)
    throw Error(Status::Parse, "id-map sidecar does not cover the dataset: " +
                                   id_map_path);
  for (Id u = 0; u < ds.n_users; ++u) ds.user_index.emplace(ds.user_ids[u], u);
  for (Id i = 0; i < ds.n_items; ++i) ds.item_index.emplace(ds.item_ids[i], i);
  return ds;
}

void save_histogram(const std::map<int, std::int64_t>& hist,
                    const std::string& path) {
  auto out = detail::open_out(path);
  out << "count,frequency\n";
  for (const auto& [count, freq] : hist) out << count << ',' << freq << '\n';
  if (!out) throw Error(Status::Io, "write failed: " + path);
}

}  // namespace graphcf
