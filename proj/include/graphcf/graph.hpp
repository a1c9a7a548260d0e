#ifndef GRAPHCF_GRAPH_HPP
#define GRAPHCF_GRAPH_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "graphcf/dataset.hpp"
#include "graphcf/types.hpp"

namespace graphcf {

struct FeedbackTable;

struct Neighbor {
  Id id = 0;
  int raw = 0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Bidirectional adjacency of the user-item bipartite graph, built from the
// training split. Immutable after construction; queries are read-only.
class InteractionGraph {
 public:
  InteractionGraph() = default;
  explicit InteractionGraph(const Dataset& train);

  Id n_users() const { return static_cast<Id>(user_adj_.size()); }
  Id n_items() const { return static_cast<Id>(item_adj_.size()); }

  std::span<const Neighbor> user_neighbors(Id u) const;
  std::span<const Neighbor> item_neighbors(Id i) const;
  std::span<const Neighbor> neighbors(Side side, Id entity) const {
    return side == Side::User ? user_neighbors(entity) : item_neighbors(entity);
  }

  Id degree(Side side, Id entity) const {
    return static_cast<Id>(neighbors(side, entity).size());
  }
  // true train degrees for one side, indexed by dense id
  std::vector<Id> degrees(Side side) const;

  // raw rating of the (entity, other) train edge, if present
  std::optional<int> edge_raw(Side side, Id entity, Id other) const;

 private:
  std::vector<std::vector<Neighbor>> user_adj_;
  std::vector<std::vector<Neighbor>> item_adj_;
};

inline InteractionGraph build_graph(const Dataset& train) {
  return InteractionGraph(train);
}

// Union of the sampled item feedback rows over u's true train items, pads
// dropped, deduplicated and sorted. With exclude_self, u itself is removed.
std::vector<Id> step_two_user_candidates(const InteractionGraph& g, Id u,
                                         const FeedbackTable& item_feedback,
                                         bool exclude_self = false);

std::vector<Id> step_two_item_candidates(const InteractionGraph& g, Id i,
                                         const FeedbackTable& user_feedback,
                                         bool exclude_self = false);

// Debug dump: one line per entity, "id<TAB>n1,n2,...".
void save_adjacency(const InteractionGraph& g, Side side,
                    const std::string& path);

}  // namespace graphcf

#endif
