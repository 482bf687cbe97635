// Tests a variance-inflated Gaussian sample against N(0, I) with each
// calibration and prints the decisions.

#include "srgof/srgof.hpp"

#include <cstdio>

using namespace srgof;

int main() {
    const std::size_t d = 5;
    const Sample x = sample({DistributionFamily::gaussian_var, d, 1.3}, 200, derive_seed(7, 1));
    const Sample y = sample({DistributionFamily::gaussian_var, d, 1.0}, 400, derive_seed(7, 2));
    const Sample ref = sample({DistributionFamily::gaussian_var, d, 1.0}, 100, derive_seed(7, 3));

    const double h = median_heuristic(stack_rows(ref, y));
    const KernelSpec kernel = KernelSpec::gaussian(h, d);
    const FilterSpec filter{FilterFamily::tikhonov, 1e-2};

    const GofOutcome perm = test_permutation(x, y, ref, kernel, filter, 0.05, 400, 11);
    std::printf("permutation  stat=%.6g  q=%.6g  p=%.4f  reject=%d\n", perm.statistic, perm.threshold, *perm.p_value,
                perm.reject);

    const GofOutcome effdim = test_effdim(x, y, ref, kernel, filter, 0.05);
    std::printf("effdim       stat=%.6g  c=%.6g  reject=%d\n", effdim.statistic, effdim.threshold, effdim.reject);

    AdaptiveConfig c;
    c.lambdas = geometric_grid(1e-6, 5.0, 64.0);
    for (double w : geometric_grid(0.01, 100.0, 10.0)) c.bandwidths.push_back(w * h);
    c.permutations = 400;
    c.seed = 11;
    const AdaptiveResult agg = adaptive_test(x, y, ref, c);
    std::printf("adaptive     pairs=%zu  level=%.4g  reject=%d  (lambda=%.3g, h=%.3g)\n", agg.pairs.size(),
                agg.corrected_alpha, agg.outcome.reject, agg.outcome.nuisance.lambda, agg.outcome.nuisance.bandwidth);

    const GofOutcome energy = test_energy_permutation(x, y, 0.05, 400, 11);
    std::printf("energy       stat=%.6g  p=%.4f  reject=%d\n", energy.statistic, *energy.p_value, energy.reject);
    return 0;
}
