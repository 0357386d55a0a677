#include "admgs/dataset.hpp"

#include <filesystem>

#include "admgs/errors.hpp"

namespace fs = std::filesystem;

namespace admgs {

const std::vector<int>& LoadedDataset::split_indices(
    const std::string& split) const {
  if (split == "train") return train_indices;
  if (split == "test") return test_indices;
  throw InvalidArgument("unknown split '" + split + "' (use train or test)");
}

LoadedDataset load_dataset(const std::string& dataset_dir) {
  LoadedDataset ds;
  ds.root = dataset_dir;
  ds.manifest = load_manifest(dataset_dir);
  ds.train_by_traversal.resize(ds.manifest.traversals.size());

  for (std::size_t m = 0; m < ds.manifest.traversals.size(); ++m) {
    for (std::size_t fi = 0; fi < ds.manifest.traversals[m].size(); ++fi) {
      const FrameRecord& rec = ds.manifest.traversals[m][fi];
      LoadedFrame lf = load_frame(dataset_dir, rec);

      Observation<float> obs;
      obs.traversal = rec.traversal;
      obs.camera_id = rec.camera_id;
      obs.timestamp = rec.timestamp;
      obs.camera = rec.camera;
      obs.rgb = std::move(lf.rgb);
      obs.gt_normal = std::move(lf.gt_normal);
      obs.gt_material = std::move(lf.gt_material);
      if (obs.rgb.width != ds.manifest.width ||
          obs.rgb.height != ds.manifest.height) {
        throw IoError("dataset: frame size mismatch in " + rec.rgb);
      }

      Image<float> mask(obs.rgb.width, obs.rgb.height, 1);
      for (std::size_t i = 0; i < mask.data.size(); ++i) {
        mask.data[i] = lf.static_mask.data[i] > 0.5f ? 1.f : 0.f;
      }
      obs.mask_normal = mask;
      obs.mask_material = mask;

      const int idx = int(ds.frames.size());
      ds.frames.push_back(std::move(obs));
      ds.static_masks.push_back(std::move(mask));
      ds.frame_in_traversal.push_back(int(fi));
      if (rec.split == "test") {
        ds.test_indices.push_back(idx);
      } else {
        ds.train_indices.push_back(idx);
        ds.train_by_traversal[m].push_back(idx);
      }
    }
  }
  if (ds.train_indices.empty()) {
    throw IoError("dataset: no training frames");
  }
  ds.init_points =
      read_ply((fs::path(dataset_dir) / ds.manifest.init_points).string());
  return ds;
}

}  // namespace admgs
