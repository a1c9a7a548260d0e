#ifndef GRAPHCF_DATASET_HPP
#define GRAPHCF_DATASET_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "graphcf/types.hpp"

namespace graphcf {

struct RatingScale {
  int min_raw = 1;
  int max_raw = 5;

  bool contains(int raw) const { return raw >= min_raw && raw <= max_raw; }
  friend bool operator==(const RatingScale&, const RatingScale&) = default;
};

// Affine map of the raw scale onto [0, 1]; order preserving.
double normalize_score(int raw, const RatingScale& scale);

struct RatingRecord {
  Id user = 0;
  Id item = 0;
  int raw = 0;
  double score = 0.0;

  friend bool operator==(const RatingRecord&, const RatingRecord&) = default;
};

// Column layout of a delimited ratings file. The delimiter is matched
// literally, so both "," and "::" style files are covered.
struct ColumnSpec {
  std::string delimiter = ",";
  int user_col = 0;
  int item_col = 1;
  int score_col = 2;
};

struct Dataset {
  std::vector<RatingRecord> records;
  Id n_users = 0;
  Id n_items = 0;
  RatingScale scale;

  // dense id <-> external id; dense ids are assigned in first-seen order
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  std::unordered_map<std::string, Id> user_index;
  std::unordered_map<std::string, Id> item_index;

  bool operator==(const Dataset& other) const {
    return records == other.records && n_users == other.n_users &&
           n_items == other.n_items && scale == other.scale &&
           user_ids == other.user_ids && item_ids == other.item_ids;
  }
};

struct SplitDataset {
  Dataset train;
  Dataset test;
  // records moved from test to train to keep every test user/item covered
  std::int64_t promoted = 0;
  double achieved_fraction = 0.0;
};

// Reads delimited rating tuples. Duplicate (user, item) pairs keep the last
// raw score seen. Throws Error(Parse) on malformed lines (with line number),
// Error(InvalidArgument) on raw scores outside the scale, Error(Parse) on an
// empty stream.
Dataset parse_ratings(std::istream& in, const ColumnSpec& spec,
                      const RatingScale& scale);

// Seeded shuffle split. Test records whose user or item would otherwise be
// unseen in train are promoted into train, so the achieved fraction can drift
// above the requested one; the caller sees that via SplitDataset.
SplitDataset split_train_test(const Dataset& ds, double train_fraction,
                              std::uint64_t seed);

// Bucket c -> number of entities with exactly c ratings. Entities without any
// rating land in bucket 0, so values sum to the side's entity count.
std::map<int, std::int64_t> feedback_histogram(const Dataset& ds, Side side);

// --- persistence -------------------------------------------------------------

void save_dataset(const Dataset& ds, const std::string& path);
void save_id_maps(const Dataset& ds, const std::string& path);
// id_map_path reconstructs the external-id bijections saved alongside.
Dataset load_dataset(const std::string& path, const std::string& id_map_path);

void save_histogram(const std::map<int, std::int64_t>& hist,
                    const std::string& path);

}  // namespace graphcf

#endif
