#include "vqp/rng.hpp"

#include <boost/math/distributions/normal.hpp>

namespace vqp {

double gaussian_draw(std::uint64_t seed, std::uint64_t index,
                     std::uint64_t component) {
  static const boost::math::normal_distribution<double> unit_normal;
  return boost::math::quantile(unit_normal,
                               uniform_open01(seed, index, component));
}

}  // namespace vqp
