#ifndef U2NET_DATASET_HPP
#define U2NET_DATASET_HPP

#include <string>
#include <utility>
#include <vector>

#include "u2net/augment.hpp"
#include "u2net/image_io.hpp"
#include "u2net/metrics.hpp"

namespace u2net {

struct PairedFile {
    std::string stem;
    std::string first_path;  // image or prediction
    std::string second_path; // mask / ground truth
};

struct PairingReport {
    std::vector<PairedFile> pairs; // lexicographic by stem
    std::vector<std::string> unmatched_first;
    std::vector<std::string> unmatched_second;
};

// Matches files between two directories by filename stem. Raises DataError
// when no pair matches; unmatched entries are reported, not fatal.
PairingReport pair_dataset(const std::string& first_dir, const std::string& second_dir);

// Training pairs: image as 1x3xHxW (grayscale replicated), mask binarized.
template <typename T>
std::vector<SamplePair<T>> load_training_pairs(const PairingReport& pairing);

// Evaluation pairs: prediction maps against binary ground truths,
// predictions resized (bilinear) to the ground-truth size when they differ;
// such resizes are listed in `notes`.
std::vector<std::pair<std::string, EvalPair>> load_eval_pairs(
    const PairingReport& pairing, std::vector<std::string>* notes = nullptr);

// 1x3xHxW tensor from a decoded image (grayscale replicated to 3 channels).
template <typename T>
Tensor<T> image_to_tensor(const ImageRecord& rec);

template <typename T>
GrayMap tensor_to_map(const Tensor<T>& map);

} // namespace u2net

#endif
