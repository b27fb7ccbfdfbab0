// Runs both tests on one draw of the sin/cubic interaction process, where the
// residual-product target vanishes but the conditional mean depends on X.
#include <cstdio>

#include "comets/comets.hpp"

int main() {
  using namespace comets;
  DgpSpec dgp;
  dgp.name = "sine-cubic-product";
  dgp.n = 1000;
  const auto data = generate(dgp, RngStream(2024));

  const auto forest = RegressorSpec::random_forest();
  const auto gcm = gcm_test(data.y, data.X, data.Z, forest, forest, RngStream(1));
  const auto pcm = pcm_test(data.y, data.X, data.Z, 10, forest, RngStream(2));

  std::printf("GCM: T = %.3f (df %zu), p = %.4g\n", gcm.statistic, gcm.df, gcm.p_value);
  std::printf("PCM: mean T over %zu splits = %.3f, p = %.4g\n", pcm.K, pcm.statistic_avg, pcm.p_value);
  return 0;
}
