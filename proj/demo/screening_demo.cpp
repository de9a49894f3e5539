// Draws one panel from the default three-factor design and compares the four
// factor-count rules with the screened strengths at the true rank.

#include <iomanip>
#include <iostream>

#include "wfm/wfm.hpp"

int main() {
  wfm::SimConfig cfg;  // N = T = 200, alpha = (0.9, 0.75, 0.6)
  cfg.seed = 11;
  const wfm::SimulatedPanel sim = wfm::simulate_panel(cfg);
  const wfm::PcDecomposition pc(sim.panel);

  for (wfm::CountMethod m : wfm::kAllCountMethods)
    std::cout << wfm::method_tag(m) << ": r_hat = " << wfm::select_r(pc, m).r_hat << '\n';

  const wfm::PcFit fit = pc.fit(cfg.r);
  const wfm::SparseFit sparse = wfm::screen(fit, wfm::threshold_value(cfg.n, cfg.t));
  const wfm::StrengthEstimate st = wfm::strengths(sparse, cfg.n);
  std::cout << std::fixed << std::setprecision(3);
  for (int k = 0; k < cfg.r; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    const auto acc = wfm::fdr_power(sim.truth.supports0[uk], sparse.supports[uk]);
    std::cout << "factor " << k + 1 << ": alpha = " << cfg.alpha[uk] << ", alpha_hat = " << st.alpha_hat[uk]
              << ", FDP = " << acc.fdp << ", power = " << acc.power << '\n';
  }
}
