#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rae/aeset.hpp"
#include "rae/errors.hpp"
#include "rae/image.hpp"
#include "rae/pgm.hpp"
#include "rae/stats.hpp"

namespace rae {

// Per-pixel level-of-change map at the query's native resolution.
struct LoCMap {
  std::string image_id;
  int width = 0;
  int height = 0;
  int source_ae = 0;  // AE the query was scored against
  std::vector<double> values;

  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
};

// Score a query against one AE: reconstruct at model resolution, take the
// absolute residual, carry it back to native resolution, and scale by the
// AE's dispersion (sigma * coefficient). Degenerate normalizers fall back to
// the sigma floor so scoring never throws on a fresh model.
inline LoCMap score_image_with_ae(const AeSet& set, const Image& query, int ae_id,
                                  const std::string& image_id = {}) {
  const Autoencoder& ae = set.ae(ae_id);
  query.validate();
  const Image down = to_model_resolution(set, query);
  const Image recon = ae.reconstruct(down);
  Image residual(down.width, down.height);
  for (std::size_t i = 0; i < residual.pixels.size(); ++i)
    residual.pixels[i] = std::abs(down.pixels[i] - recon.pixels[i]);
  const Image native = resize_nearest(residual, query.width, query.height);

  double sigma = ae.normalizer.degenerate() ? kDegenerateSigma : ae.normalizer.sigma();
  if (sigma <= 0.0) sigma = kDegenerateSigma;
  const double scale = sigma * ae.normalizer.coefficient;

  LoCMap map;
  map.image_id = image_id;
  map.width = query.width;
  map.height = query.height;
  map.source_ae = ae_id;
  map.values.resize(native.pixels.size());
  for (std::size_t i = 0; i < native.pixels.size(); ++i) map.values[i] = native.pixels[i] / scale;
  return map;
}

// Score against the best-matching AE (lowest normalized set error).
inline LoCMap score_image(const AeSet& set, const Image& query, const std::string& image_id = {}) {
  const Assignment best = assign_best_ae(set, query);
  return score_image_with_ae(set, query, best.ae_id, image_id);
}

struct RankedPixel {
  std::string image_id;
  int x = 0;
  int y = 0;
  double loc = 0.0;
};

// Global descending ranking across maps. Ties break by image id, then by
// row-major pixel index, so the order is total and reproducible.
inline std::vector<RankedPixel> rank_pixels(std::span<const LoCMap> maps) {
  std::size_t total = 0;
  for (const LoCMap& m : maps) total += m.values.size();
  std::vector<RankedPixel> out;
  out.reserve(total);
  for (const LoCMap& m : maps) {
    for (int y = 0; y < m.height; ++y)
      for (int x = 0; x < m.width; ++x)
        out.push_back(RankedPixel{m.image_id, x, y, m.at(x, y)});
  }
  std::sort(out.begin(), out.end(), [](const RankedPixel& a, const RankedPixel& b) {
    if (a.loc != b.loc) return a.loc > b.loc;
    if (a.image_id != b.image_id) return a.image_id < b.image_id;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });
  return out;
}

// PGM rendering of a LoC map: min-max scaled to [0,1], with the true range
// preserved in a JSON sidecar so values stay recoverable.
inline void write_loc_map(const LoCMap& map, const std::string& pgm_path,
                          const std::string& sidecar_path) {
  if (map.values.empty()) throw InvalidInput("write_loc_map: empty map");
  double lo = map.values.front();
  double hi = map.values.front();
  for (const double v : map.values) {
    if (!std::isfinite(v)) throw NumericError("write_loc_map: non-finite LoC value");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  Image img(map.width, map.height);
  const double span = hi - lo;
  for (std::size_t i = 0; i < map.values.size(); ++i)
    img.pixels[i] = span > 0.0 ? (map.values[i] - lo) / span : 0.0;
  write_pgm(img, pgm_path);

  nlohmann::json side;
  side["image_id"] = map.image_id;
  side["width"] = map.width;
  side["height"] = map.height;
  side["source_ae"] = map.source_ae;
  side["min"] = lo;
  side["max"] = hi;
  std::ofstream out(sidecar_path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + sidecar_path);
  out << side.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + sidecar_path);
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

// CSV of ranked pixels: image_id,x,y,loc (descending by loc).
inline void write_ranked_csv(std::span<const RankedPixel> ranked, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "image_id,x,y,loc\n";
  for (const RankedPixel& p : ranked)
    out << p.image_id << "," << p.x << "," << p.y << "," << format_double(p.loc) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace rae
