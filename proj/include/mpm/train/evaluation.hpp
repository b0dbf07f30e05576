#pragma once

#include <vector>

#include "mpm/data/record.hpp"
#include "mpm/mask/mask_sampler.hpp"
#include "mpm/net/mpm_net.hpp"

namespace mpm::train {

/// Lifts a normalized 2D sequence of any length to millimeter 3D with one
/// output frame per input frame.
///
/// kFinetune runs the strided decoder on one edge-padded window centered on
/// every frame. kPretrain tiles the sequence with consecutive windows and
/// keeps every output frame of the single-block 3D decoder. Masked points of
/// occlusion (frames x joints, optional) are replaced by the 2D token; fully
/// masked frames additionally receive the embedding token in the pretraining
/// path.
pose::PoseSequence lift_2d(net::MpmNet<float>& model, const pose::PoseSequence& seq2d, net::DecodeStage stage,
                           const mask::JointMask* occlusion = nullptr, int batch_windows = 128);

/// Masked reconstruction through the pretraining decoder over tiled windows.
/// Output is in millimeters for 3D, normalized coordinates for 2D.
pose::PoseSequence reconstruct_sequence(net::MpmNet<float>& model, const pose::PoseSequence& seq,
                                        net::Modality input, net::Modality output, const mask::JointMask* mask,
                                        int batch_windows = 128);

/// Frame-weighted MPJPE (mm) of lift_2d over the paired records, using at most
/// max_records of them (0 = all). With a policy, each record's input is masked
/// by a mask drawn from policy.seed and the record index.
double validation_mpjpe(net::MpmNet<float>& model, const std::vector<data::SequenceRecord>& records,
                        net::DecodeStage stage, int max_records = 0, const mask::MaskPolicy* policy = nullptr);

}  // namespace mpm::train
