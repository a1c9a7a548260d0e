#include "graphcf/graph.hpp"

#include <algorithm>

#include "graphcf/feedback.hpp"
#include "io_util.hpp"

namespace graphcf {

InteractionGraph::InteractionGraph(const Dataset& train) {
  if (train.records.empty())
    throw Error(Status::InvalidArgument, "cannot build a graph without records");
  user_adj_.resize(train.n_users);
  item_adj_.resize(train.n_items);
  for (const RatingRecord& r : train.records) {
    user_adj_[r.user].push_back({r.item, r.raw});
    item_adj_[r.item].push_back({r.user, r.raw});
  }
  auto by_id = [](const Neighbor& a, const Neighbor& b) { return a.id < b.id; };
  for (auto& adj : user_adj_) std::sort(adj.begin(), adj.end(), by_id);
  for (auto& adj : item_adj_) std::sort(adj.begin(), adj.end(), by_id);
}

std::span<const Neighbor> InteractionGraph::user_neighbors(Id u) const {
  if (u < 0 || u >= n_users())
    throw Error(Status::InvalidArgument,
                "user id " + std::to_string(u) + " out of range");
  return user_adj_[u];
}

std::span<const Neighbor> InteractionGraph::item_neighbors(Id i) const {
  if (i < 0 || i >= n_items())
    throw Error(Status::InvalidArgument,
                "item id " + std::to_string(i) + " out of range");
  return item_adj_[i];
}

std::vector<Id> InteractionGraph::degrees(Side side) const {
  const auto& adj = side == Side::User ? user_adj_ : item_adj_;
  std::vector<Id> out(adj.size());
  for (std::size_t e = 0; e < adj.size(); ++e)
    out[e] = static_cast<Id>(adj[e].size());
  return out;
}

std::optional<int> InteractionGraph::edge_raw(Side side, Id entity,
                                              Id other) const {
  auto adj = neighbors(side, entity);
  auto it = std::lower_bound(
      adj.begin(), adj.end(), other,
      [](const Neighbor& n, Id id) { return n.id < id; });
  if (it != adj.end() && it->id == other) return it->raw;
  return std::nullopt;
}

namespace {

std::vector<Id> step_two_candidates(const InteractionGraph& g, Side side,
                                    Id entity, const FeedbackTable& opposite,
                                    bool exclude_self) {
  const Side other = side == Side::User ? Side::Item : Side::User;
  if (opposite.side != other || opposite.step != 1)
    throw Error(Status::InvalidArgument,
                "step-two candidates need the opposite side's step-one table");

  std::vector<Id> out;
  for (const Neighbor& n : g.neighbors(side, entity)) {
    for (Id e : opposite.row(n.id)) {  // row() rejects uncovered neighbors
      if (e != kPad) out.push_back(e);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (exclude_self) {
    auto it = std::lower_bound(out.begin(), out.end(), entity);
    if (it != out.end() && *it == entity) out.erase(it);
  }
  return out;
}

}  // namespace

std::vector<Id> step_two_user_candidates(const InteractionGraph& g, Id u,
                                         const FeedbackTable& item_feedback,
                                         bool exclude_self) {
  return step_two_candidates(g, Side::User, u, item_feedback, exclude_self);
}

std::vector<Id> step_two_item_candidates(const InteractionGraph& g, Id i,
                                         const FeedbackTable& user_feedback,
                                         bool exclude_self) {
  return step_two_candidates(g, Side::Item, i, user_feedback, exclude_self);
}

void save_adjacency(const InteractionGraph& g, Side side,
                    const std::string& path) {
  auto out = detail::open_out(path);
  const Id n = side == Side::User ? g.n_users() : g.n_items();
  for (Id e = 0; e < n; ++e) {
    out << e << '\t';
    auto adj = g.neighbors(side, e);
    for (std::size_t j = 0; j < adj.size(); ++j) {
      if (j) out << ',';
      out << adj[j].id;
    }
    out << '\n';
  }
  if (!out) throw Error(Status::Io, "write failed: " + path);
}

}  // namespace graphcf
