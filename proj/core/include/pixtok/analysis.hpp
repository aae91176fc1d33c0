#pragma once

#include <memory>
#include <string>
#include <vector>

#include "pixtok/checkpoint.hpp"
#include "pixtok/model.hpp"

namespace pixtok {

// Both metrics skip tokens without a grid position (cls): those keys are
// dropped and each query row is renormalised over the remaining keys. Per
// query values are averaged uniformly over grid queries and divided by
// `normalizer` (the image side length in pixels by default).
//
// distance: sum_k a(q,k) |coord(k) - coord(q)|
// offset:   |sum_k a(q,k) coord(k) - coord(q)|
double mean_attention_distance(const AttentionRecord& record, double normalizer);
double mean_attention_offset(const AttentionRecord& record, double normalizer);

// Per layer, per head values averaged over samples, each layer's heads sorted
// ascending.
struct AttentionStats {
  int layers = 0;
  int heads = 0;
  std::vector<std::vector<double>> distance;  // [layer][rank]
  std::vector<std::vector<double>> offset;

  // "layer,head,metric,value", head being the rank after sorting.
  std::string to_csv() const;
};
AttentionStats compute_attention_stats(const std::vector<AttentionRecord>& records,
                                       double normalizer);

struct QueryAttentionMap {
  int layer = 0;
  int query_row = 0;
  int query_col = 0;
  int grid_height = 0;
  int grid_width = 0;
  std::vector<std::vector<float>> heads;  // [head][row * grid_width + col]
  std::vector<double> cls_mass;           // attention the query gives to cls
};

// Runs one (normalized) image with recording and extracts the query token's
// attention row at `layer`, reshaped onto the token grid. The query is given
// in token-grid coordinates; outside the grid is a ConfigError.
QueryAttentionMap attention_map_for_query(const VisionTransformer& model, const Image& image,
                                          int layer, int query_row, int query_col);
std::string query_map_csv(const QueryAttentionMap& map);

// Rebuilds a classifier from a classifier or MAE checkpoint. MAE checkpoints
// supply the encoder only; the head keeps its fresh initialisation.
std::unique_ptr<VisionTransformer> classifier_from_checkpoint(const Checkpoint& ckpt);

}  // namespace pixtok
