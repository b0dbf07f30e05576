#pragma once

#include <random>
#include <vector>

#include "mpm/data/record.hpp"
#include "mpm/data/window.hpp"
#include "mpm/nn/parameters.hpp"

namespace mpm::train {

/// A batch of windows in model units, (size * seq_len) rows per modality.
/// Either matrix is empty when the modality is absent.
struct Batch {
  int size = 0;
  int seq_len = 0;
  int joints = 0;
  nn::Matrix<double> pose2d;
  nn::Matrix<double> pose3d;

  bool has_2d() const { return pose2d.size() > 0; }
  bool has_3d() const { return pose3d.size() > 0; }
  /// size x (joints * 3): the middle frame of every window.
  nn::Matrix<double> middle3d() const;
};

/// Stacks windows; flips[i] mirrors window i horizontally. Windows must agree
/// in length and modalities.
Batch make_batch(const std::vector<data::Window>& windows, const std::vector<bool>& flips = {});

enum class Requirement { k2D, k3D, kPaired };

/// Indices of records carrying the required modalities.
std::vector<size_t> eligible_records(const std::vector<data::SequenceRecord>& records, Requirement need);

/// batch_size windows from records drawn uniformly (with replacement) among
/// eligible, each centered on a uniformly chosen frame with edge padding and
/// flipped with probability flip_prob. Only the modalities named by need are kept.
Batch sample_batch(const std::vector<data::SequenceRecord>& records, const std::vector<size_t>& eligible,
                   Requirement need, int batch_size, int seq_len, double flip_prob, std::mt19937_64& rng);

}  // namespace mpm::train
