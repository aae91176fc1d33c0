#include "pixtok/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "pixtok/error.hpp"

namespace pixtok {

namespace {

void check_record(const AttentionRecord& r, double normalizer) {
  const auto n = static_cast<std::size_t>(r.length);
  if (r.weights.size() != n * n || r.query_coords.size() != n || r.key_coords.size() != n) {
    throw ShapeError("attention record is inconsistent with its length");
  }
  if (!(normalizer > 0.0)) throw ConfigError("metric normalizer must be positive");
}

// Calls f(query, key weights renormalised over grid keys) for every grid query.
template <typename F>
double average_over_queries(const AttentionRecord& r, F per_query) {
  double total = 0.0;
  int queries = 0;
  for (int q = 0; q < r.length; ++q) {
    if (!r.query_coords[q].valid()) continue;
    double mass = 0.0;
    for (int k = 0; k < r.length; ++k)
      if (r.key_coords[k].valid()) mass += r.weight(q, k);
    if (mass <= 0.0) continue;
    total += per_query(q, 1.0 / mass);
    ++queries;
  }
  return queries ? total / queries : 0.0;
}

}  // namespace

double mean_attention_distance(const AttentionRecord& r, double normalizer) {
  check_record(r, normalizer);
  const double mean = average_over_queries(r, [&](int q, double inv_mass) {
    const auto& cq = r.query_coords[q];
    double acc = 0.0;
    for (int k = 0; k < r.length; ++k) {
      const auto& ck = r.key_coords[k];
      if (!ck.valid()) continue;
      acc += r.weight(q, k) * inv_mass * std::hypot(ck.row - cq.row, ck.col - cq.col);
    }
    return acc;
  });
  return mean / normalizer;
}

double mean_attention_offset(const AttentionRecord& r, double normalizer) {
  check_record(r, normalizer);
  const double mean = average_over_queries(r, [&](int q, double inv_mass) {
    const auto& cq = r.query_coords[q];
    double row = 0.0, col = 0.0;
    for (int k = 0; k < r.length; ++k) {
      const auto& ck = r.key_coords[k];
      if (!ck.valid()) continue;
      const double w = r.weight(q, k) * inv_mass;
      row += w * ck.row;
      col += w * ck.col;
    }
    return std::hypot(row - cq.row, col - cq.col);
  });
  return mean / normalizer;
}

AttentionStats compute_attention_stats(const std::vector<AttentionRecord>& records,
                                       double normalizer) {
  std::map<std::pair<int, int>, std::pair<double, double>> sums;
  std::map<std::pair<int, int>, int> counts;
  AttentionStats stats;
  for (const auto& r : records) {
    auto& s = sums[{r.layer, r.head}];
    s.first += mean_attention_distance(r, normalizer);
    s.second += mean_attention_offset(r, normalizer);
    ++counts[{r.layer, r.head}];
    stats.layers = std::max(stats.layers, r.layer + 1);
    stats.heads = std::max(stats.heads, r.head + 1);
  }
  stats.distance.assign(stats.layers, {});
  stats.offset.assign(stats.layers, {});
  for (const auto& [key, s] : sums) {
    const double n = counts[key];
    stats.distance[key.first].push_back(s.first / n);
    stats.offset[key.first].push_back(s.second / n);
  }
  for (int l = 0; l < stats.layers; ++l) {
    std::sort(stats.distance[l].begin(), stats.distance[l].end());
    std::sort(stats.offset[l].begin(), stats.offset[l].end());
  }
  return stats;
}

std::string AttentionStats::to_csv() const {
  std::string out = "layer,head,metric,value\n";
  for (int l = 0; l < layers; ++l) {
    for (std::size_t h = 0; h < distance[l].size(); ++h) {
      out += fmt::format("{},{},distance,{:.9g}\n", l, h, distance[l][h]);
    }
    for (std::size_t h = 0; h < offset[l].size(); ++h) {
      out += fmt::format("{},{},offset,{:.9g}\n", l, h, offset[l][h]);
    }
  }
  return out;
}

QueryAttentionMap attention_map_for_query(const VisionTransformer& model, const Image& image,
                                          int layer, int query_row, int query_col) {
  const auto& cfg = model.config();
  const int side = cfg.grid_side();
  if (query_row < 0 || query_row >= side || query_col < 0 || query_col >= side) {
    throw ConfigError(fmt::format("query ({}, {}) is outside the {}x{} token grid", query_row,
                                  query_col, side, side));
  }
  if (layer < 0 || layer >= cfg.layers) {
    throw ConfigError(fmt::format("layer {} outside [0, {})", layer, cfg.layers));
  }
  NoGradGuard guard;
  ForwardContext ctx;
  std::vector<Image> batch{image};
  const auto result = model.forward_encoder(model.embed(batch), ctx, true);
  QueryAttentionMap map;
  map.layer = layer;
  map.query_row = query_row;
  map.query_col = query_col;
  map.grid_height = map.grid_width = side;
  const int q = 1 + query_row * side + query_col;
  for (const auto& r : result.records) {
    if (r.layer != layer) continue;
    std::vector<float> heat(static_cast<std::size_t>(side) * side);
    for (int k = 1; k < r.length; ++k) heat[k - 1] = r.weight(q, k);
    map.heads.push_back(std::move(heat));
    map.cls_mass.push_back(r.weight(q, 0));
  }
  return map;
}

std::string query_map_csv(const QueryAttentionMap& map) {
  std::string out = "head,row,col,weight\n";
  for (std::size_t h = 0; h < map.heads.size(); ++h) {
    for (int r = 0; r < map.grid_height; ++r) {
      for (int c = 0; c < map.grid_width; ++c) {
        out += fmt::format("{},{},{},{:.9g}\n", h, r, c, map.heads[h][r * map.grid_width + c]);
      }
    }
    out += fmt::format("{},cls,cls,{:.9g}\n", h, map.cls_mass[h]);
  }
  return out;
}

std::unique_ptr<VisionTransformer> classifier_from_checkpoint(const Checkpoint& ckpt) {
  const ModelConfig cfg = checkpoint_model_config(ckpt);
  auto model = std::make_unique<VisionTransformer>(cfg, 0);
  const std::string kind = ckpt.header.value("kind", "");
  if (kind == "classifier") {
    load_parameters(ckpt, model->parameters());
  } else if (kind == "mae") {
    ParamList encoder;
    for (const auto& p : model->parameters())
      if (p.name.rfind("head.", 0) != 0) encoder.push_back(p);
    load_parameters(ckpt, encoder);
  } else {
    throw CheckpointMismatch("kind", "unknown checkpoint kind '" + kind + "'");
  }
  return model;
}

}  // namespace pixtok
