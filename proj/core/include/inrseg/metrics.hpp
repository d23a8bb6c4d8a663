#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "inrseg/tensor.hpp"

namespace inrseg {

// PSNR reported for identical images.
inline constexpr double kPsnrCapDb = 100.0;

/// Per-class Dice 2|P∩G| / (|P| + |G|). A class absent from both maps scores 1.
struct DiceReport {
  std::vector<double> per_class;
  double foreground_mean = 0.0;  // mean over classes 1..C-1 (headline number)
  double all_mean = 0.0;         // mean over every class, background included
};

DiceReport dice(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt,
                std::size_t num_classes);

// -10 log10(MSE) with unit peak, capped at kPsnrCapDb. Shapes must match.
double psnr(const DenseArray& reference, const DenseArray& estimate);

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
  std::size_t count = 0;
};

Summary summarize(std::span<const double> values);

}  // namespace inrseg
