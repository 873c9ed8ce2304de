#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "rae/autoencoder.hpp"
#include "rae/errors.hpp"
#include "rae/image.hpp"
#include "rae/parallel.hpp"

namespace rae {

// Ordered set of place-specific autoencoders. Order is semantic: index j is
// the training generation, and any prefix is itself a usable model set.
struct AeSet {
  std::vector<Autoencoder> aes;
  double threshold = 0.0;  // normalized score threshold the set was trained against

  bool empty() const { return aes.empty(); }
  std::size_t size() const { return aes.size(); }

  int input_width() const { return aes.empty() ? 0 : aes.front().width(); }
  int input_height() const { return aes.empty() ? 0 : aes.front().height(); }

  const Autoencoder& ae(int id) const {  // 1-based
    if (id < 1 || static_cast<std::size_t>(id) > aes.size())
      throw InvalidInput("AeSet: no AE with id " + std::to_string(id));
    return aes[static_cast<std::size_t>(id - 1)];
  }
  Autoencoder& ae(int id) {
    return const_cast<Autoencoder&>(static_cast<const AeSet&>(*this).ae(id));
  }

  void validate() const {
    for (std::size_t i = 0; i < aes.size(); ++i) {
      if (aes[i].width() != input_width() || aes[i].height() != input_height())
        throw InvalidState("AeSet: AE " + std::to_string(i + 1) + " input dimensions differ from the set's");
      if (aes[i].id != static_cast<int>(i) + 1)
        throw InvalidState("AeSet: AE id " + std::to_string(aes[i].id) + " does not match position " +
                           std::to_string(i + 1));
    }
  }
};

struct Assignment {
  int ae_id = 0;              // 1-based id of the best AE
  double normalized_re = 0.0; // its normalized full-image reconstruction error
  double raw_re = 0.0;        // the raw Eq.-style error behind it
};

// Downsamples to the set's model resolution when the image is larger;
// model-resolution images pass through untouched.
inline Image to_model_resolution(const AeSet& set, const Image& img) {
  if (set.empty()) throw InvalidState("AeSet is empty");
  return resize_area(img, set.input_width(), set.input_height());
}

// Best AE = argmin over the set of the normalized full-image error; ties go
// to the lowest index. Degenerate normalizers fall back to the sigma floor.
inline Assignment assign_best_ae(const AeSet& set, const Image& img) {
  if (set.empty()) throw InvalidState("assign_best_ae: AE set is empty");
  const Image model_img = to_model_resolution(set, img);
  Assignment best;
  for (std::size_t i = 0; i < set.aes.size(); ++i) {
    const double raw = reconstruction_error(set.aes[i], model_img);
    const double z = set.aes[i].normalizer.normalize_or_floor(raw);
    if (i == 0 || z < best.normalized_re) best = Assignment{static_cast<int>(i) + 1, z, raw};
  }
  return best;
}

struct NormalAssignment {
  std::size_t image_index = 0;
  int ae_id = 0;
  double normalized_re = 0.0;
  double raw_re = 0.0;
};

// Split of an image list into the normal side (with assignments) and the
// anomalous side (indices whose best normalized error exceeds the threshold).
struct TrainingPartition {
  std::vector<NormalAssignment> normal;
  std::vector<std::size_t> anomalous;

  std::size_t total() const { return normal.size() + anomalous.size(); }

  void validate(std::size_t n_images, double v_re_star) const {
    std::vector<char> seen(n_images, 0);
    for (const auto& entry : normal) {
      if (entry.image_index >= n_images || seen[entry.image_index]++)
        throw InvalidState("TrainingPartition: normal entries must uniquely cover input indices");
      if (entry.normalized_re > v_re_star)
        throw InvalidState("TrainingPartition: normal entry above threshold");
    }
    for (const std::size_t idx : anomalous) {
      if (idx >= n_images || seen[idx]++)
        throw InvalidState("TrainingPartition: anomalous entries must uniquely cover input indices");
    }
    if (total() != n_images) throw InvalidState("TrainingPartition: does not cover the input set");
  }
};

// Assigns every image to its best AE and thresholds the normalized error.
// Pure: normalizers are not touched.
inline TrainingPartition partition(const AeSet& set, std::span<const Image> images, double v_re_star,
                                   int threads = 1) {
  if (set.empty()) throw InvalidState("partition: AE set is empty");
  std::vector<Assignment> assignments(images.size());
  parallel_for(images.size(), threads,
               [&](std::size_t i) { assignments[i] = assign_best_ae(set, images[i]); });
  TrainingPartition part;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (assignments[i].normalized_re <= v_re_star)
      part.normal.push_back(NormalAssignment{i, assignments[i].ae_id, assignments[i].normalized_re,
                                             assignments[i].raw_re});
    else
      part.anomalous.push_back(i);
  }
  return part;
}

// Prefix truncation: the first n_prime AEs, normalizers intact, nothing
// retrained. Scores produced by the surviving AEs are unchanged.
inline AeSet compress(const AeSet& set, int n_prime) {
  if (n_prime < 1 || static_cast<std::size_t>(n_prime) > set.size())
    throw InvalidInput("compress: n_prime " + std::to_string(n_prime) + " out of range [1," +
                       std::to_string(set.size()) + "]");
  AeSet out;
  out.threshold = set.threshold;
  out.aes.assign(set.aes.begin(), set.aes.begin() + n_prime);
  return out;
}

}  // namespace rae
