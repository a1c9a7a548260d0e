#ifndef GRAPHCF_ADAPTIVE_HPP
#define GRAPHCF_ADAPTIVE_HPP

#include <span>
#include <utility>
#include <vector>

#include "graphcf/model.hpp"
#include "graphcf/params.hpp"

namespace graphcf {

// phi = <alpha_entity, beta_feedback>; both orderings share this since the
// inner product is symmetric.
double pair_weight(std::span<const double> a, std::span<const double> b);

// sum_j <entity_factor, factor_table[j]> * table[j]. phi_out, when non-empty,
// receives the per-slot weights.
void aggregate_weighted(std::span<const Id> row, const EmbeddingTable& table,
                        std::span<const double> entity_factor,
                        const EmbeddingTable& factor_table,
                        std::span<double> out, std::span<double> phi_out = {});

// Raw (pre-softmax) attention score of one (entity, feedback) pair.
double mlp_forward(const MlpParams& mlp, std::span<const double> entity_vec,
                   std::span<const double> fb_vec);

// Flat-input variant for backprop: acts[0] gets the input, acts[l + 1] layer
// l's pre-activations (the final layer is linear, so its entry is the output).
double mlp_forward_cached(const MlpParams& mlp, std::span<const double> input,
                          std::vector<std::vector<double>>& acts);

// Max-subtracted softmax of scores / t. Throws Error(Config) for t <= 0.
std::vector<double> softmax_temperature(std::span<const double> scores, double t);

// Softmax restricted to slots with active[s] != 0; inactive slots get 0.
void softmax_temperature_masked(std::span<const double> scores, double t,
                                std::span<const char> active,
                                std::span<double> out);

// Attention core shared by the forward pass: scores every slot with the MLP,
// normalizes, and accumulates attn_s * e_s into out. Fills cache.raw,
// cache.attn and cache.mlp_acts for backprop; with mask_pad set, pad slots are
// excluded from the softmax and contribute nothing.
void attentive_fill(std::span<const Id> row, const EmbeddingTable& table,
                    std::span<const double> entity_vec, const MlpParams& mlp,
                    double t, bool mask_pad, SideCache& cache,
                    std::span<double> out);

// Attention-weighted sum over the row; returns the aggregate and the
// normalized scores. mask_pad drops pad slots from the softmax.
std::pair<std::vector<double>, std::vector<double>> aggregate_attentive(
    std::span<const Id> row, const EmbeddingTable& table,
    std::span<const double> entity_vec, const MlpParams& mlp, double t,
    bool mask_pad = false);

// Normalized attention scores of one entity's row under `params`.
// step selects the step-one or step-two network and embedding table.
std::vector<double> attention_scores(const ModelParams& params, Side side,
                                     int step, Id entity,
                                     std::span<const Id> row);

double predict_wgcf(const ModelParams& params, Id u, Id i,
                    std::span<const Id> user_row, std::span<const Id> item_row);
double predict_agcf(const ModelParams& params, Id u, Id i,
                    std::span<const Id> user_row, std::span<const Id> item_row);
double predict_agcf2(const ModelParams& params, Id u, Id i,
                     std::span<const Id> user_row, std::span<const Id> item_row,
                     std::span<const Id> user_row2,
                     std::span<const Id> item_row2);

}  // namespace graphcf

#endif
