#pragma once

#include <random>

#include "boilingflow/core_grid.hpp"

namespace bftest {

inline bflow::ImageD random_image(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  bflow::ImageD img(rows, cols);
  for (Eigen::Index i = 0; i < img.size(); ++i) img(i) = n01(rng);
  return img;
}

inline bflow::Mask random_mask(Eigen::Index rows, Eigen::Index cols, double p_valid, std::mt19937_64& rng) {
  std::bernoulli_distribution b(p_valid);
  bflow::Mask m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = b(rng);
  return m;
}

inline bflow::ScreenSequence random_sequence(Eigen::Index rows, Eigen::Index cols, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<bflow::ImageD> frames;
  for (std::size_t t = 0; t < n; ++t) frames.push_back(random_image(rows, cols, rng));
  return bflow::make_sequence(std::move(frames), 1.0, 1.0);
}

}  // namespace bftest
