// Estimates hash collision rates over a range of point distances and compares
// them with the closed-form probability 2*Phi(r/c) - 1 - 2c/(sqrt(2*pi)*r) *
// (1 - exp(-r^2 / (2 c^2))).

#include <cmath>
#include <cstdio>

#include "fedgroup/fedgroup.hpp"

namespace {

double collision_closed_form(double r, double c) {
  const double ratio = r / c;
  const double phi_term = 0.5 * std::erfc(-ratio / std::sqrt(2.0));
  return 2.0 * phi_term - 1.0 -
         2.0 * c / (std::sqrt(2.0 * M_PI) * r) * (1.0 - std::exp(-ratio * ratio / 2.0));
}

}  // namespace

int main() {
  const double r = 3.0;
  const std::size_t dim = 8;
  const std::size_t trials = 50000;

  std::printf("window r = %.1f, dimension %zu, %zu trials per distance\n", r, dim, trials);
  std::printf("%-10s %-12s %s\n", "distance", "empirical", "closed form");
  for (const double c : {0.3, 1.0, 1.5, 3.0, 6.0, 15.0, 30.0}) {
    const double rate = fedgroup::collision_rate(dim, r, c, trials, 7);
    std::printf("%-10.1f %-12.4f %.4f\n", c, rate, collision_closed_form(r, c));
  }
  return 0;
}
