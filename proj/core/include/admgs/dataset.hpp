#pragma once

#include <string>
#include <vector>

#include "admgs/io.hpp"
#include "admgs/pipeline.hpp"
#include "admgs/synth.hpp"

namespace admgs {

// A dataset pulled fully into memory. Supervision masks are prebuilt:
// mask = 1 where the ground-truth static mask exceeds 0.5 (the layer is
// valid there by construction).
struct LoadedDataset {
  std::string root;
  DatasetManifest manifest;
  std::vector<Observation<float>> frames;  // traversal-major order
  std::vector<Image<float>> static_masks;  // per frame, H×W×1
  std::vector<int> frame_in_traversal;     // per frame, index within traversal
  std::vector<int> train_indices;
  std::vector<int> test_indices;
  std::vector<std::vector<int>> train_by_traversal;
  PointCloud init_points;

  int traversal_count() const { return int(manifest.traversals.size()); }
  const std::vector<int>& split_indices(const std::string& split) const;
};

LoadedDataset load_dataset(const std::string& dataset_dir);

}  // namespace admgs
