#include "inrseg/dataset.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "inrseg/errors.hpp"
#include "inrseg/npy.hpp"

namespace inrseg {
namespace {

using nlohmann::json;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw DataError("unknown split '" + s + "' (expected train, val or test)");
}

DenseArray Sample::targets() const {
  const std::size_t n = pixels();
  return image.reshaped(Shape{n, channels()});
}

DenseArray Sample::one_hot() const {
  DenseArray out(Shape{pixels(), num_classes});
  for (std::size_t i = 0; i < mask.size(); ++i) out(i, mask[i]) = 1.0;
  return out;
}

std::vector<double> Sample::pixel_weights(double bg_scale) const {
  std::vector<double> w(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) w[i] = mask[i] == 0 ? bg_scale : 1.0;
  return w;
}

void Sample::validate() const {
  if (extents.empty() || shape_product(extents) != mask.size())
    throw InputError("sample " + id + ": mask does not match extents " +
                     shape_to_string(extents));
  if (image.rank() != extents.size() + 1 ||
      !std::equal(extents.begin(), extents.end(), image.shape().begin()))
    throw InputError("sample " + id + ": image shape " + shape_to_string(image.shape()) +
                     " does not match extents " + shape_to_string(extents));
  for (std::uint8_t v : mask)
    if (v >= num_classes)
      throw InputError("sample " + id + ": mask class " + std::to_string(v) + " >= " +
                       std::to_string(num_classes));
}

std::vector<Sample> select_split(const std::vector<Sample>& samples, Split split) {
  std::vector<Sample> out;
  for (const auto& s : samples)
    if (s.split == split) out.push_back(s);
  return out;
}

bool normalize_intensity(DenseArray& image) {
  if (image.size() == 0) return true;
  const auto [lo, hi] = std::minmax_element(image.values().begin(), image.values().end());
  const double mn = *lo, mx = *hi;
  if (!(mx > mn)) {
    image.fill(0.0);
    return false;
  }
  const double range = mx - mn;
  for (double& v : image.values()) v = std::clamp((v - mn) / range, 0.0, 1.0);
  return true;
}

LoadedDataset load_dataset(const std::filesystem::path& manifest, std::size_t num_classes) {
  std::ifstream in(manifest);
  if (!in) throw MissingFileError("manifest not found: " + manifest.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("manifest " + manifest.string() + " is not valid JSON: " + e.what());
  }
  LoadedDataset out;
  out.num_classes = num_classes;
  if (out.num_classes == 0) {
    if (!doc.contains("num_classes"))
      throw DataError("manifest " + manifest.string() + " lacks num_classes");
    out.num_classes = doc.at("num_classes").get<std::size_t>();
  }
  if (!doc.contains("subjects") || !doc.at("subjects").is_array())
    throw DataError("manifest " + manifest.string() + " lacks a subjects array");

  const auto base = manifest.parent_path();
  for (const auto& entry : doc.at("subjects")) {
    Sample s;
    try {
      s.id = entry.at("id").get<std::string>();
      s.split = parse_split(entry.at("split").get<std::string>());
      const auto image_path = resolve(base, entry.at("image").get<std::string>());
      const auto mask_path = resolve(base, entry.at("mask").get<std::string>());
      s.num_classes = out.num_classes;

      Shape mask_shape;
      try {
        s.mask = read_npy_u8(mask_path, mask_shape);
      } catch (const MissingFileError& e) {
        throw MissingFileError("subject " + s.id + ": " + e.what());
      } catch (const NpyFormatError& e) {
        throw NpyFormatError("subject " + s.id + ": " + e.what());
      }
      s.extents = mask_shape;
      for (std::uint8_t v : s.mask) {
        if (v >= out.num_classes)
          throw MaskClassError("subject " + s.id + ": mask " + mask_path.string() +
                               " contains class " + std::to_string(v) + " but num_classes is " +
                               std::to_string(out.num_classes));
      }

      DenseArray image;
      try {
        image = read_npy_float(image_path);
      } catch (const MissingFileError& e) {
        throw MissingFileError("subject " + s.id + ": " + e.what());
      } catch (const NpyFormatError& e) {
        throw NpyFormatError("subject " + s.id + ": " + e.what());
      }
      Shape with_channel = s.extents;
      with_channel.push_back(1);
      if (image.shape() == s.extents) {
        image = image.reshaped(with_channel);
      } else if (image.rank() != s.extents.size() + 1 ||
                 !std::equal(s.extents.begin(), s.extents.end(), image.shape().begin())) {
        throw ExtentMismatchError("subject " + s.id + ": image " + image_path.string() +
                                  " has shape " + shape_to_string(image.shape()) +
                                  " but mask has " + shape_to_string(s.extents));
      }
      if (!all_finite(image))
        throw NpyFormatError("subject " + s.id + ": image " + image_path.string() +
                             " contains non-finite values");
      if (!normalize_intensity(image))
        out.warnings.push_back("subject " + s.id + ": constant image normalized to zeros");
      s.image = std::move(image);
    } catch (const json::exception& e) {
      throw DataError("manifest " + manifest.string() + ": malformed subject entry: " + e.what());
    }
    out.samples.push_back(std::move(s));
  }
  return out;
}

std::filesystem::path write_dataset(const std::vector<Sample>& samples,
                                    const std::filesystem::path& dir, std::size_t num_classes) {
  std::filesystem::create_directories(dir);
  json subjects = json::array();
  for (const auto& s : samples) {
    const std::string image_name = s.id + "_image.npy";
    const std::string mask_name = s.id + "_mask.npy";
    // single-channel images are written with the spatial shape only
    if (s.channels() == 1) {
      write_npy(dir / image_name, s.image.reshaped(s.extents), NpyDtype::kFloat32);
    } else {
      write_npy(dir / image_name, s.image, NpyDtype::kFloat32);
    }
    write_npy_u8(dir / mask_name, s.mask, s.extents);
    subjects.push_back(
        {{"id", s.id}, {"image", image_name}, {"mask", mask_name}, {"split", split_name(s.split)}});
  }
  json doc = {{"num_classes", num_classes}, {"subjects", subjects}};
  const auto path = dir / "manifest.json";
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path.string());
  os << doc.dump(2) << '\n';
  return path;
}

}  // namespace inrseg
