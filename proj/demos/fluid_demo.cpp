// Prints the branching data and fluid constants of a config, then one
// simulated path next to its scaled fluid limit.
//
//   fluid_demo demos/configs/gated_symmetric.json [n]

#include <polling/polling.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace polling;

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: fluid_demo CONFIG [n]\n";
    return 4;
  }
  std::ifstream in(argv[1]);
  std::stringstream ss;
  ss << in.rdbuf();
  const int n = argc > 2 ? std::atoi(argv[2]) : 10;
  try {
    const ValidatedConfig cfg(parse_config(ss.str()));
    const Analysis an = analyze(cfg);
    std::printf("rho = %.12f  alpha = %.12f\n", an.spectral.rho, an.fluid.alpha);
    for (std::size_t i = 0; i <= cfg.size(); ++i) std::printf("b_bar[%zu] = %.12f\n", i + 1, an.fluid.b_bar[i]);

    const auto grid = make_grid(1.0, an.spectral.rho * an.spectral.rho, 12, true);
    RngStream s(cfg.base_seed(), "demo");
    const auto d = scaled_trajectory_distance(an, n, grid, s);
    std::printf("path at scale rho^%d: xi_hat = %.6f, sup distance = %.4f (against xi = 1: %.4f)\n", n, d.xi_hat,
                d.sup_distance, d.sup_distance_xi_one);
    for (double t : grid) {
      const Vector q = scaled_limit(an.fluid, d.xi_hat, t);
      std::printf("t = %8.4f  limit =", t);
      for (double x : q) std::printf(" %8.4f", x);
      std::printf("\n");
    }
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }
  return 0;
}
