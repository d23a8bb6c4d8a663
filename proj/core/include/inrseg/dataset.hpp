#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "inrseg/tensor.hpp"

namespace inrseg {

enum class Split { kTrain, kVal, kTest };

const char* split_name(Split s);
Split parse_split(const std::string& s);  // throws DataError

/// One subject: intensity image, integer class mask and the split it belongs to.
/// Background is always class 0.
struct Sample {
  std::string id;
  Split split = Split::kTrain;
  Shape extents;                    // spatial extents, one per axis
  DenseArray image;                 // (extents..., D), intensities in [0, 1]
  std::vector<std::uint8_t> mask;   // row-major over extents, values < num_classes
  std::size_t num_classes = 2;

  std::size_t dims() const { return extents.size(); }
  std::size_t pixels() const { return mask.size(); }
  std::size_t channels() const { return pixels() ? image.size() / pixels() : 0; }
  // Image viewed as (pixels x D) for the network.
  DenseArray targets() const;
  DenseArray one_hot() const;
  // bg_scale where the mask is background, 1 elsewhere.
  std::vector<double> pixel_weights(double bg_scale) const;

  // Throws InputError if extents, image, mask or class values disagree.
  void validate() const;
};

std::vector<Sample> select_split(const std::vector<Sample>& samples, Split split);

// Min-max rescale to [0, 1]. Returns false (and zeroes the image) when max == min.
bool normalize_intensity(DenseArray& image);

struct LoadedDataset {
  std::vector<Sample> samples;
  std::size_t num_classes = 0;
  std::vector<std::string> warnings;
};

/// Reads a manifest of the form
///   {"num_classes": 4,
///    "subjects": [{"id": "s0", "image": "s0_img.npy", "mask": "s0_mask.npy", "split": "train"}]}
/// Relative paths resolve against the manifest's directory. Images are '<f4'
/// (or '<f8') NPY with shape extents or (extents..., D); masks are '|u1' NPY with
/// shape extents. Each image is min-max normalized to [0, 1].
/// `num_classes` overrides the manifest's value when non-zero.
LoadedDataset load_dataset(const std::filesystem::path& manifest, std::size_t num_classes = 0);

// Writes NPY files and manifest.json into `dir`; returns the manifest path.
std::filesystem::path write_dataset(const std::vector<Sample>& samples,
                                    const std::filesystem::path& dir, std::size_t num_classes);

}  // namespace inrseg
