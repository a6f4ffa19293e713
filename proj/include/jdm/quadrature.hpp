#ifndef JDM_QUADRATURE_HPP
#define JDM_QUADRATURE_HPP

// Fixed 15-point Gauss-Kronrod rule on a finite interval.

#include <array>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>

#include "jdm/errors.hpp"

namespace jdm {

struct GK15Rule {
  // First the seven Gauss-Legendre nodes, then the eight Kronrod extension
  // nodes.
  static constexpr std::array<double, 15> nodes{
      -0.949107912342758524526189684047851, -0.741531185599394439863864773280788,
      -0.405845151377397166906606412076961, 0.0,
      0.405845151377397166906606412076961,  0.741531185599394439863864773280788,
      0.949107912342758524526189684047851,  -0.991455371120812639206854697526329,
      -0.864864423359769072789712788640926, -0.586087235467691130294144838258730,
      -0.207784955007898467600689403773245, 0.207784955007898467600689403773245,
      0.586087235467691130294144838258730,  0.864864423359769072789712788640926,
      0.991455371120812639206854697526329};
  static constexpr std::array<double, 15> weights{
      0.063092092629978553290700663189204, 0.140653259715525918745189590510238,
      0.190350578064785409913256402421014, 0.209482141084727828012999174891714,
      0.190350578064785409913256402421014, 0.140653259715525918745189590510238,
      0.063092092629978553290700663189204, 0.022935322010529224963732008058970,
      0.104790010322250183839876322541518, 0.169004726639267902826583426598550,
      0.204432940075298892414161999234649, 0.204432940075298892414161999234649,
      0.169004726639267902826583426598550, 0.104790010322250183839876322541518,
      0.022935322010529224963732008058970};

  /// Node j mapped from [-1, 1] onto [a, b].
  static constexpr double abscissa(std::size_t j, double a, double b) {
    return 0.5 * (b - a) * nodes[j] + 0.5 * (b + a);
  }
};

/// Integral of f over [a, b] split into `panels` equal sub-intervals, each
/// integrated with the 15-point rule. Throws NumericError when f is not
/// finite at a node.
template <typename F>
double gk15_integrate(F&& f, double a, double b, std::size_t panels = 1) {
  if (!std::isfinite(a) || !std::isfinite(b))
    throw std::invalid_argument("integration bounds must be finite");
  if (b < a) throw std::invalid_argument("integration requires a <= b");
  if (panels == 0) throw std::invalid_argument("panel count must be positive");
  if (a == b) return 0.0;
  const double width = (b - a) / static_cast<double>(panels);
  double total = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = a + static_cast<double>(p) * width;
    const double hi = (p + 1 == panels) ? b : lo + width;
    const double half = 0.5 * (hi - lo);
    double sum = 0.0;
    for (std::size_t j = 0; j < 15; ++j) {
      const double u = GK15Rule::abscissa(j, lo, hi);
      const double v = f(u);
      if (!std::isfinite(v)) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "integrand not finite at node u = " << u;
        throw NumericError(msg.str(), u);
      }
      sum += GK15Rule::weights[j] * v;
    }
    total += half * sum;
  }
  return total;
}

}  // namespace jdm

#endif  // JDM_QUADRATURE_HPP
