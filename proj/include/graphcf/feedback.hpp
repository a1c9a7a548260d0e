#ifndef GRAPHCF_FEEDBACK_HPP
#define GRAPHCF_FEEDBACK_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "graphcf/graph.hpp"
#include "graphcf/types.hpp"

namespace graphcf {

struct ModelParams;
struct TrainConfig;

// Fixed-width sampled feedback lists, one row of exactly k entries per entity.
// Short lists are padded with kPad, which owns a trainable embedding row.
struct FeedbackTable {
  Side side = Side::User;
  int step = 1;
  int k = 20;
  Id n_entities = 0;
  std::vector<Id> entries;  // n_entities * k, row-major

  std::span<const Id> row(Id entity) const {
    if (entity < 0 || entity >= n_entities)
      throw Error(Status::InvalidArgument,
                  std::string("no feedback row for ") + side_name(side) +
                      " id " + std::to_string(entity));
    return {entries.data() + static_cast<std::size_t>(entity) * k,
            static_cast<std::size_t>(k)};
  }
  std::span<Id> row(Id entity) {
    if (entity < 0 || entity >= n_entities)
      throw Error(Status::InvalidArgument,
                  std::string("no feedback row for ") + side_name(side) +
                      " id " + std::to_string(entity));
    return {entries.data() + static_cast<std::size_t>(entity) * k,
            static_cast<std::size_t>(k)};
  }

  friend bool operator==(const FeedbackTable&, const FeedbackTable&) = default;
};

struct SamplePolicy {
  enum class Kind { Random, Relevance };
  Kind kind = Kind::Random;
  std::uint64_t seed = 1;
  int k = 20;
};

SamplePolicy::Kind parse_policy(const std::string& name);
const char* policy_name(SamplePolicy::Kind kind);

// Draws each row i.i.d. with replacement from the entity's neighbors, so
// low-degree entities repeat entries. Entities without neighbors get all-pad
// rows. Rows depend only on (seed, side, entity id).
FeedbackTable sample_random(const InteractionGraph& g, Side side,
                            const SamplePolicy& policy);

// Basic MF fit whose embeddings score relevance; cfg must select ModelKind MF.
ModelParams pretrain_relevance_embeddings(const Dataset& train,
                                          const TrainConfig& cfg);

// Top-k neighbors by inner product of the pretrained embeddings, ties broken
// by ascending id, padded up to k when the entity has fewer neighbors.
FeedbackTable sample_relevance(const InteractionGraph& g, Side side,
                               const ModelParams& mf, int k);

// Step-two rows: k draws without replacement when the candidate set is large
// enough, otherwise every candidate followed by pads.
FeedbackTable sample_step_two(Side side,
                              const std::vector<std::vector<Id>>& candidates,
                              int k, std::uint64_t seed);

void save_feedback_table(const FeedbackTable& table, const std::string& path);
FeedbackTable load_feedback_table(const std::string& path);

}  // namespace graphcf

#endif
