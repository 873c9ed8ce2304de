#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rae/aeset.hpp"
#include "rae/autoencoder.hpp"
#include "rae/errors.hpp"
#include "rae/image.hpp"
#include "rae/rng.hpp"
#include "rae/scoring.hpp"

namespace rae {

// Axis-aligned pixel box, half-open: [x_min, x_max) x [y_min, y_max).
struct BoxI {
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;

  long long area() const {
    return static_cast<long long>(x_max - x_min) * static_cast<long long>(y_max - y_min);
  }
  bool valid() const { return x_min < x_max && y_min < y_max; }
};

inline long long intersection_area(const BoxI& a, const BoxI& b) {
  const long long w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const long long h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (w <= 0 || h <= 0) return 0;
  return w * h;
}

inline double iou(const BoxI& a, const BoxI& b) {
  if (!a.valid() || !b.valid()) throw InvalidInput("iou: degenerate box");
  const long long inter = intersection_area(a, b);
  const long long uni = a.area() + b.area() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

struct Annotation {
  std::string image_id;
  BoxI box;
  std::string label;

  void validate(int width = 0, int height = 0) const {
    if (image_id.empty()) throw InvalidInput("Annotation: empty image_id");
    if (!box.valid()) throw InvalidInput("Annotation: box must have positive extent (" + image_id + ")");
    if (box.x_min < 0 || box.y_min < 0) throw InvalidInput("Annotation: negative box corner (" + image_id + ")");
    if (width > 0 && box.x_max > width)
      throw InvalidInput("Annotation: box exceeds image width (" + image_id + ")");
    if (height > 0 && box.y_max > height)
      throw InvalidInput("Annotation: box exceeds image height (" + image_id + ")");
  }
};

// JSON lines, one object per record.
inline void write_annotations(std::span<const Annotation> annots, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (const Annotation& a : annots) {
    nlohmann::json j;
    j["image_id"] = a.image_id;
    j["x_min"] = a.box.x_min;
    j["y_min"] = a.box.y_min;
    j["x_max"] = a.box.x_max;
    j["y_max"] = a.box.y_max;
    j["label"] = a.label;
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

inline std::vector<Annotation> read_annotations(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::vector<Annotation> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path + ":" + std::to_string(line_no) + ": bad JSON record: " + e.what());
    }
    try {
      Annotation a;
      a.image_id = j.at("image_id").get<std::string>();
      a.box.x_min = j.at("x_min").get<int>();
      a.box.y_min = j.at("y_min").get<int>();
      a.box.x_max = j.at("x_max").get<int>();
      a.box.y_max = j.at("y_max").get<int>();
      a.label = j.value("label", std::string{});
      a.validate();
      out.push_back(std::move(a));
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path + ":" + std::to_string(line_no) + ": missing annotation field: " + e.what());
    }
  }
  return out;
}

// Fixed-size grid over a LoC map; each cell holds the max of its pixels.
// Boundary cells shrink to fit, so cols/rows are ceilings.
struct CellGrid {
  std::string image_id;
  int width = 0;
  int height = 0;
  int cell_size = 10;
  int cols = 0;
  int rows = 0;
  std::vector<double> values;  // rows * cols, row-major

  double at(int col, int row) const { return values[static_cast<std::size_t>(row) * cols + col]; }

  // Pixel rectangle of a cell, clipped at the image border.
  BoxI cell_box(int col, int row) const {
    BoxI b;
    b.x_min = col * cell_size;
    b.y_min = row * cell_size;
    b.x_max = std::min(width, b.x_min + cell_size);
    b.y_max = std::min(height, b.y_min + cell_size);
    return b;
  }
};

inline CellGrid pool_cells(const LoCMap& map, int cell_size = 10) {
  if (cell_size < 1) throw InvalidInput("pool_cells: cell_size must be >= 1");
  if (map.width <= 0 || map.height <= 0 || map.values.size() !=
      static_cast<std::size_t>(map.width) * static_cast<std::size_t>(map.height))
    throw ShapeError("pool_cells: malformed LoC map");
  CellGrid grid;
  grid.image_id = map.image_id;
  grid.width = map.width;
  grid.height = map.height;
  grid.cell_size = cell_size;
  grid.cols = (map.width + cell_size - 1) / cell_size;
  grid.rows = (map.height + cell_size - 1) / cell_size;
  grid.values.assign(static_cast<std::size_t>(grid.cols) * grid.rows,
                     -std::numeric_limits<double>::infinity());
  for (int y = 0; y < map.height; ++y) {
    const int row = y / cell_size;
    for (int x = 0; x < map.width; ++x) {
      const int col = x / cell_size;
      double& slot = grid.values[static_cast<std::size_t>(row) * grid.cols + col];
      slot = std::max(slot, map.at(x, y));
    }
  }
  return grid;
}

struct EvalRow {
  std::string method;
  double x_percent = 0.0;
  double iou_min = 0.0;
  double accuracy = 0.0;
  std::size_t detected = 0;
  std::size_t total = 0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
};

inline void write_eval_csv(const EvalReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "method,X,iou_min,accuracy,detected,total\n";
  for (const EvalRow& r : report.rows) {
    out << r.method << "," << format_double(r.x_percent) << "," << format_double(r.iou_min) << ","
        << format_double(r.accuracy) << "," << r.detected << "," << r.total << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

namespace detail {

struct CellRef {
  std::size_t grid = 0;
  int col = 0;
  int row = 0;
  double value = 0.0;
};

// Deterministic global ordering: value descending, then image id, row, col.
inline std::vector<CellRef> sorted_cells(std::span<const CellGrid> grids) {
  std::vector<CellRef> cells;
  for (std::size_t g = 0; g < grids.size(); ++g)
    for (int row = 0; row < grids[g].rows; ++row)
      for (int col = 0; col < grids[g].cols; ++col)
        cells.push_back(CellRef{g, col, row, grids[g].at(col, row)});
  std::sort(cells.begin(), cells.end(), [&](const CellRef& a, const CellRef& b) {
    if (a.value != b.value) return a.value > b.value;
    if (grids[a.grid].image_id != grids[b.grid].image_id)
      return grids[a.grid].image_id < grids[b.grid].image_id;
    if (a.row != b.row) return a.row < b.row;
    return a.col < b.col;
  });
  return cells;
}

}  // namespace detail

// Top-X protocol: pool every cell of every query image into one descending
// list, keep the top x_percent, and count an annotated object as detected
// when the IoU between its box and the union of selected cells that overlap
// the box reaches iou_min. Selected cells are axis-aligned and disjoint, so
// the union area is a plain sum.
inline EvalReport top_x_accuracy(std::span<const CellGrid> grids, std::span<const Annotation> annots,
                                 double x_percent, double iou_min) {
  if (annots.empty()) throw InvalidInput("top_x_accuracy: no annotations");
  if (!(x_percent > 0.0) || x_percent > 100.0)
    throw InvalidInput("top_x_accuracy: x_percent must be in (0, 100]");
  if (!(iou_min > 0.0) || iou_min > 1.0)
    throw InvalidInput("top_x_accuracy: iou_min must be in (0, 1]");

  std::map<std::string, std::size_t> grid_of;
  for (std::size_t g = 0; g < grids.size(); ++g) {
    if (!grid_of.emplace(grids[g].image_id, g).second)
      throw InvalidInput("top_x_accuracy: duplicate grid for image " + grids[g].image_id);
  }

  const std::vector<detail::CellRef> cells = detail::sorted_cells(grids);
  const std::size_t n_selected =
      static_cast<std::size_t>(std::floor(x_percent / 100.0 * static_cast<double>(cells.size())));

  // Selected cells bucketed per grid for the per-annotation sweep.
  std::vector<std::vector<detail::CellRef>> selected(grids.size());
  for (std::size_t i = 0; i < n_selected; ++i) selected[cells[i].grid].push_back(cells[i]);

  std::size_t detected = 0;
  for (const Annotation& a : annots) {
    const auto it = grid_of.find(a.image_id);
    if (it == grid_of.end())
      throw InvalidInput("top_x_accuracy: annotation references unknown image " + a.image_id);
    const CellGrid& grid = grids[it->second];
    a.validate(grid.width, grid.height);

    long long inter = 0;
    long long cells_area = 0;
    for (const detail::CellRef& c : selected[it->second]) {
      const BoxI cb = grid.cell_box(c.col, c.row);
      const long long overlap = intersection_area(cb, a.box);
      if (overlap <= 0) continue;
      inter += overlap;
      cells_area += cb.area();
    }
    const long long uni = a.box.area() + cells_area - inter;
    const double score = uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
    if (score >= iou_min) ++detected;
  }

  EvalRow row;
  row.x_percent = x_percent;
  row.iou_min = iou_min;
  row.detected = detected;
  row.total = annots.size();
  row.accuracy = static_cast<double>(detected) / static_cast<double>(annots.size());
  EvalReport report;
  report.rows.push_back(row);
  return report;
}

// ---- k-means baseline -----------------------------------------------------

// Declared feature space for the clustering baseline: the image area-resized
// to 8x8 and flattened (64-dim intensity vector).
inline std::vector<double> kmeans_feature(const Image& img) {
  return resize_area(img, 8, 8).pixels;
}

struct KMeansResult {
  std::vector<std::vector<double>> centroids;
  std::vector<int> assignment;  // cluster index per input
  double inertia = 0.0;         // total within-cluster squared distance
  int iterations = 0;
  std::vector<double> inertia_history;  // one entry per Lloyd iteration
};

namespace detail {

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace detail

// Lloyd's algorithm with distance-weighted seeding. Empty clusters are
// re-seeded from the point farthest from its current centroid.
inline KMeansResult kmeans_cluster(const std::vector<std::vector<double>>& features, int k,
                                   std::uint64_t seed, int max_iters = 100) {
  const std::size_t n = features.size();
  if (k < 1) throw InvalidInput("kmeans_cluster: k must be >= 1");
  if (static_cast<std::size_t>(k) > n) throw InvalidInput("kmeans_cluster: k exceeds point count");
  const std::size_t dim = features.front().size();
  for (const auto& f : features)
    if (f.size() != dim) throw ShapeError("kmeans_cluster: inconsistent feature dimension");

  Rng rng(derive_seed(seed, "kmeans-seeding"));
  KMeansResult res;
  res.centroids.reserve(k);
  res.centroids.push_back(features[rng.next_below(n)]);
  std::vector<double> d2(n);
  while (res.centroids.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : res.centroids) best = std::min(best, detail::sq_dist(features[i], c));
      d2[i] = best;
      total += best;
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double r = rng.next_double() * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= r) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.next_below(n);  // all points coincide with a centroid
    }
    res.centroids.push_back(features[pick]);
  }

  res.assignment.assign(n, 0);
  for (int iter = 0; iter < max_iters; ++iter) {
    res.iterations = iter + 1;
    bool changed = iter == 0;
    res.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = detail::sq_dist(features[i], res.centroids[0]);
      for (int c = 1; c < k; ++c) {
        const double d = detail::sq_dist(features[i], res.centroids[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (res.assignment[i] != best) changed = true;
      res.assignment[i] = best;
      res.inertia += best_d;
    }
    res.inertia_history.push_back(res.inertia);
    if (!changed) break;

    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[res.assignment[i]];
      for (std::size_t j = 0; j < dim; ++j) sums[res.assignment[i]][j] += features[i][j];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        // farthest point from its own centroid becomes the new seed
        std::size_t far_idx = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = detail::sq_dist(features[i], res.centroids[res.assignment[i]]);
          if (d > far_d) {
            far_d = d;
            far_idx = i;
          }
        }
        res.centroids[c] = features[far_idx];
        continue;
      }
      for (std::size_t j = 0; j < dim; ++j) res.centroids[c][j] = sums[c][j] / counts[c];
    }
  }
  return res;
}

// Baseline trainer: cluster the corpus in feature space, then train one AE
// per cluster and fit its normalizer on that cluster's errors.
inline AeSet kmeans_train(std::span<const Image> images, int k, const TrainConfig& cfg,
                          const std::vector<int>& layer_sizes = {}, KMeansResult* clustering = nullptr) {
  cfg.validate();
  if (images.empty()) throw InvalidInput("kmeans_train: image list is empty");
  if (k < 1 || static_cast<std::size_t>(k) > images.size())
    throw InvalidInput("kmeans_train: k must be in [1, |images|]");
  const int w = images.front().width;
  const int h = images.front().height;
  for (const Image& img : images)
    if (img.width != w || img.height != h) throw ShapeError("kmeans_train: images must share one shape");

  std::vector<std::vector<double>> features;
  features.reserve(images.size());
  for (const Image& img : images) features.push_back(kmeans_feature(img));
  KMeansResult clusters = kmeans_cluster(features, k, derive_seed(cfg.seed, "kmeans"));

  AeSet set;
  for (int c = 0; c < k; ++c) {
    std::vector<Image> members;
    for (std::size_t i = 0; i < images.size(); ++i)
      if (clusters.assignment[i] == c) members.push_back(images[i]);
    if (members.empty()) throw InvalidState("kmeans_train: empty cluster survived re-seeding");

    TrainConfig tc = cfg;
    tc.seed = derive_seed(cfg.seed, "kmeans-ae", static_cast<std::uint64_t>(c + 1));
    Autoencoder ae = make_autoencoder(w, h, tc.seed, tc.weight_init_scale, layer_sizes);
    fit(ae, members, tc);
    ae.id = c + 1;
    for (const Image& img : members) ae.normalizer.update(reconstruction_error(ae, img));
    set.aes.push_back(std::move(ae));
  }
  if (clustering) *clustering = std::move(clusters);
  return set;
}

// Fraction of points whose cluster's majority true label matches their own.
inline double cluster_purity(std::span<const int> assigned, std::span<const int> truth) {
  if (assigned.size() != truth.size() || assigned.empty())
    throw InvalidInput("cluster_purity: size mismatch or empty");
  std::map<int, std::map<int, std::size_t>> table;
  for (std::size_t i = 0; i < assigned.size(); ++i) ++table[assigned[i]][truth[i]];
  std::size_t majority_sum = 0;
  for (const auto& [cluster, counts] : table) {
    std::size_t best = 0;
    for (const auto& [label, count] : counts) best = std::max(best, count);
    majority_sum += best;
  }
  return static_cast<double>(majority_sum) / static_cast<double>(assigned.size());
}

// Uniform-noise LoC map; the control arm of the benchmark.
inline LoCMap random_loc_map(int width, int height, std::uint64_t seed, const std::string& image_id) {
  if (width <= 0 || height <= 0) throw InvalidInput("random_loc_map: dimensions must be positive");
  LoCMap map;
  map.image_id = image_id;
  map.width = width;
  map.height = height;
  map.source_ae = 0;
  map.values.resize(static_cast<std::size_t>(width) * height);
  Rng rng(derive_seed(seed, "random-control-" + image_id));
  for (double& v : map.values) v = rng.next_double();
  return map;
}

}  // namespace rae
