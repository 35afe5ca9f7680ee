#pragma once

#include "branching.hpp"
#include "fluid.hpp"
#include "model.hpp"

namespace polling {

/// Everything analytic about one validated config.
struct Analysis {
  ValidatedConfig cfg;
  VisitMeans visit;
  Matrix M;
  SpectralData spectral;
  FluidConstants fluid;
};

inline Analysis analyze(const ValidatedConfig& cfg, const PerronOptions& opt = {}) {
  VisitMeans vm = visit_means(cfg);
  Matrix m = session_mean_matrix(vm);
  SpectralData sd = perron(m, opt);
  FluidConstants fc = fluid_constants(vm, sd, cfg);
  return Analysis{cfg, std::move(vm), std::move(m), std::move(sd), std::move(fc)};
}

}  // namespace polling
