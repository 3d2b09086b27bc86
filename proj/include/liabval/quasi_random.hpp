#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>

#include <Eigen/Dense>

namespace liabval {

// Point `index` (>= 1) of the Halton sequence in [0,1)^dim, dim <= 16.
inline Eigen::VectorXd halton_point(std::size_t index, Eigen::Index dim) {
  static constexpr std::array<unsigned, 16> primes{2, 3, 5, 7, 11, 13, 17, 19,
                                                   23, 29, 31, 37, 41, 43, 47, 53};
  if (dim > static_cast<Eigen::Index>(primes.size())) {
    throw std::invalid_argument("halton_point: dimension above 16");
  }
  Eigen::VectorXd x(dim);
  for (Eigen::Index d = 0; d < dim; ++d) {
    const unsigned base = primes[static_cast<std::size_t>(d)];
    double f = 1.0, r = 0.0;
    for (std::size_t i = index; i > 0; i /= base) {
      f /= base;
      r += f * static_cast<double>(i % base);
    }
    x[d] = r;
  }
  return x;
}

// Halton point mapped into the box center +- half_width.
inline Eigen::VectorXd halton_in_box(std::size_t index, const Eigen::VectorXd& center,
                                     const Eigen::VectorXd& half_width) {
  return center.array() + half_width.array() * (2.0 * halton_point(index, center.size()).array() - 1.0);
}

}  // namespace liabval
