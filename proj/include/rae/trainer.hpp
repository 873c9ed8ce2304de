#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"
#include "rae/aeset.hpp"
#include "rae/autoencoder.hpp"
#include "rae/errors.hpp"
#include "rae/parallel.hpp"
#include "rae/rng.hpp"

namespace rae {

struct RecursionConfig {
  double v_re_star = 0.6;    // normalized-error threshold for the normal/anomalous split
  int max_aes = 8;           // hard cap on set size
  int min_cluster_size = 2;  // anomalous residues smaller than this are force-assigned
  TrainConfig train_cfg;

  // implementation knobs
  std::vector<int> layer_sizes;  // empty = default architecture for the input size
  int threads = 1;

  void validate() const {
    if (!(v_re_star >= 0.0)) throw InvalidInput("RecursionConfig: v_re_star must be nonnegative");
    if (max_aes < 1) throw InvalidInput("RecursionConfig: max_aes must be >= 1");
    if (min_cluster_size < 1) throw InvalidInput("RecursionConfig: min_cluster_size must be >= 1");
    train_cfg.validate();
  }
};

struct IterationRecord {
  int iteration = 0;                       // i
  std::size_t training_set_size = 0;       // |T_i|
  std::size_t anomalous_count = 0;         // |T_i^+| after this iteration's split
  int ae_count = 0;                        // N_i
  std::vector<Normalizer> normalizer_state;  // per-AE state after the update sweep
};

struct ForcedAssignment {
  std::size_t image_index = 0;
  int ae_id = 0;
  double normalized_re = 0.0;
};

struct RecursionReport {
  std::vector<IterationRecord> iterations;
  std::vector<ForcedAssignment> forced;  // images left anomalous at termination
  TrainingPartition final_partition;     // pure partition of all inputs with the frozen set
  std::string termination;               // "converged" | "max_aes" | "min_cluster_size"
};

// Recursive model-set growth. Generation i trains on the previous
// generation's anomalous subset; normal images update their assigned AE's
// normalizer after each evaluation sweep. A new AE's normalizer is seeded
// from its own training-set errors so its first threshold test is
// well-defined.
inline AeSet recursive_train(std::span<const Image> images, const RecursionConfig& cfg,
                             RecursionReport* report = nullptr) {
  cfg.validate();
  if (images.empty()) throw InvalidInput("recursive_train: image list is empty");
  const int w = images.front().width;
  const int h = images.front().height;
  for (const Image& img : images)
    if (img.width != w || img.height != h)
      throw ShapeError("recursive_train: images must share one shape");

  AeSet set;
  set.threshold = cfg.v_re_star;
  RecursionReport local;
  RecursionReport& rep = report ? *report : local;
  rep = RecursionReport{};

  std::vector<std::size_t> current(images.size());
  for (std::size_t i = 0; i < current.size(); ++i) current[i] = i;

  while (true) {
    const int generation = static_cast<int>(set.size()) + 1;
    std::vector<Image> subset;
    subset.reserve(current.size());
    for (const std::size_t idx : current) subset.push_back(images[idx]);

    TrainConfig tc = cfg.train_cfg;
    tc.seed = derive_seed(cfg.train_cfg.seed, "rae-generation", static_cast<std::uint64_t>(generation));
    Autoencoder ae = make_autoencoder(w, h, tc.seed, tc.weight_init_scale, cfg.layer_sizes);
    fit(ae, subset, tc);
    ae.id = generation;

    std::vector<double> seed_res(subset.size());
    parallel_for(subset.size(), cfg.threads,
                 [&](std::size_t k) { seed_res[k] = reconstruction_error(ae, subset[k]); });
    for (const double v : seed_res) ae.normalizer.update(v);
    set.aes.push_back(std::move(ae));

    TrainingPartition part = partition(set, subset, cfg.v_re_star, cfg.threads);
    part.validate(subset.size(), cfg.v_re_star);
    for (const NormalAssignment& entry : part.normal)
      set.ae(entry.ae_id).normalizer.update(entry.raw_re);

    IterationRecord record;
    record.iteration = generation;
    record.training_set_size = current.size();
    record.anomalous_count = part.anomalous.size();
    record.ae_count = static_cast<int>(set.size());
    for (const Autoencoder& member : set.aes) record.normalizer_state.push_back(member.normalizer);
    rep.iterations.push_back(std::move(record));

    std::vector<std::size_t> anomalous;
    anomalous.reserve(part.anomalous.size());
    for (const std::size_t local_idx : part.anomalous) anomalous.push_back(current[local_idx]);

    if (anomalous.empty()) {
      rep.termination = "converged";
      break;
    }
    if (static_cast<int>(set.size()) >= cfg.max_aes) {
      rep.termination = "max_aes";
      current = std::move(anomalous);
      break;
    }
    if (anomalous.size() < static_cast<std::size_t>(cfg.min_cluster_size)) {
      rep.termination = "min_cluster_size";
      current = std::move(anomalous);
      break;
    }
    current = std::move(anomalous);
  }

  if (rep.termination != "converged") {
    for (const std::size_t idx : current) {
      const Assignment best = assign_best_ae(set, images[idx]);
      rep.forced.push_back(ForcedAssignment{idx, best.ae_id, best.normalized_re});
    }
  }
  rep.final_partition = partition(set, images, cfg.v_re_star, cfg.threads);
  return set;
}

// Per-image AE id from a finished run: recorded assignment for normal
// images, best-AE assignment for the anomalous remainder.
inline std::vector<int> final_assignments(const AeSet& set, std::span<const Image> images,
                                          const TrainingPartition& part) {
  std::vector<int> out(images.size(), 0);
  for (const NormalAssignment& entry : part.normal) out[entry.image_index] = entry.ae_id;
  for (const std::size_t idx : part.anomalous) out[idx] = assign_best_ae(set, images[idx]).ae_id;
  return out;
}

inline nlohmann::json normalizer_to_json(const Normalizer& n) {
  return {{"count", n.count}, {"sum", n.sum}, {"sum_sq", n.sum_sq}, {"coefficient", n.coefficient}};
}

// Training manifest: per-iteration sizes plus normalizer state, for audit.
inline nlohmann::json report_to_json(const RecursionReport& rep) {
  nlohmann::json j;
  j["termination"] = rep.termination;
  j["iterations"] = nlohmann::json::array();
  for (const IterationRecord& rec : rep.iterations) {
    nlohmann::json it;
    it["iteration"] = rec.iteration;
    it["training_set_size"] = rec.training_set_size;
    it["anomalous_count"] = rec.anomalous_count;
    it["n_aes"] = rec.ae_count;
    it["normalizers"] = nlohmann::json::array();
    for (const Normalizer& n : rec.normalizer_state) it["normalizers"].push_back(normalizer_to_json(n));
    j["iterations"].push_back(std::move(it));
  }
  j["forced"] = nlohmann::json::array();
  for (const ForcedAssignment& f : rep.forced)
    j["forced"].push_back({{"image_index", f.image_index}, {"ae_id", f.ae_id}, {"normalized_re", f.normalized_re}});
  nlohmann::json fin;
  fin["normal"] = nlohmann::json::array();
  for (const NormalAssignment& entry : rep.final_partition.normal)
    fin["normal"].push_back({{"image_index", entry.image_index},
                             {"ae_id", entry.ae_id},
                             {"normalized_re", entry.normalized_re}});
  fin["anomalous"] = rep.final_partition.anomalous;
  j["final_partition"] = std::move(fin);
  return j;
}

}  // namespace rae
