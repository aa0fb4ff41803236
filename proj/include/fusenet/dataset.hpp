#pragma once
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "fusenet/matrix.hpp"

namespace fusenet {

/// Labeled feature set. Features are reals in [0,1] (one row per sample);
/// class_set lists the distinct labels present, sorted ascending.
struct Dataset {
    Matrix features;
    std::vector<int> labels;
    std::vector<int> class_set;

    std::size_t size() const { return labels.size(); }
    std::size_t feature_dim() const { return features.cols; }

    /// Builds a Dataset from raw rows + labels, deriving class_set and
    /// checking the invariants (range, count agreement).
    static Dataset from(Matrix features, std::vector<int> labels);

    /// Throws if any invariant is violated.
    void validate() const;
};

/// Reads an IDX image/label file pair (the MNIST container format:
/// big-endian magic + dimension sizes, unsigned-byte payload). Pixels are
/// flattened row-major and scaled byte/255 into [0,1].
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path);

/// Writes a Dataset as an IDX pair. Features are quantized to bytes
/// (round(v*255)); n_features must be a perfect square or `rows`/`cols`
/// are taken as (1, n_features).
void save_idx(const Dataset& d, const std::filesystem::path& images_path,
              const std::filesystem::path& labels_path);

struct SynthBlobsResult {
    Dataset dataset;
    std::size_t clipped_values = 0; ///< >0 means noise pushed samples outside [0,1]
};

/// Deterministic Gaussian-blob fixture: class c gets n_per_class samples
/// around a per-seed center, clamped into [0,1].
SynthBlobsResult synth_blobs(std::size_t n_classes, std::size_t n_features,
                             std::size_t n_per_class, double center_scale,
                             double noise_std, std::uint64_t seed);

/// Partitions by label: first result holds exactly the samples whose label
/// is in classes_a (which must be a nonempty proper subset of d.class_set).
std::pair<Dataset, Dataset> split_by_class(const Dataset& d,
                                           const std::vector<int>& classes_a);

/// Seeded stratified holdout: returns (train, val) with exactly val_count
/// validation samples, each class represented within +-1 of its
/// proportional share.
std::pair<Dataset, Dataset> holdout(const Dataset& d, std::size_t val_count,
                                    std::uint64_t seed);

/// Concatenates two datasets with equal feature dimension.
Dataset concat(const Dataset& a, const Dataset& b);

} // namespace fusenet
