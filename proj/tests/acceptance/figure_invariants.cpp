// Properties of the four built-in figure sweeps.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "dpo/experiment.hpp"

using namespace dpo;

TEST_CASE("figure sweeps") {
  for (const auto& [name, config] : figure_configs()) {
    CAPTURE(name);
    const std::vector<SweepRow> rows = run_sweep(config);
    std::map<std::string, std::vector<const SweepRow*>> groups;
    for (const SweepRow& r : rows) groups[r.scenario_id].push_back(&r);
    REQUIRE(groups.size() == 3);

    for (const auto& [id, g] : groups) {
      CAPTURE(id);
      REQUIRE(g.size() == 7);
      const SweepRow& last = *g.back();
      for (const SweepRow* r : g) {
        // Shared inputs do not change along the schedule.
        CHECK(r->fingerprint == g.front()->fingerprint);
        CHECK(r->converged);
        CHECK(r->spectral_radius < 1.0);
        CHECK(r->bias_sq_norm ==
              doctest::Approx(r->closed_form_sq_norm).epsilon(1e-6));
      }
      if (last.assumption3_satisfied) {
        CHECK(last.limit_bias_sq_norm == 0.0);
        for (std::size_t i = 1; i < g.size(); ++i)
          CHECK(g[i]->bias_sq_norm <= g[i - 1]->bias_sq_norm);
      } else {
        const double lim = last.limit_bias_sq_norm;
        CHECK(std::abs(last.bias_sq_norm - lim) / lim <= 0.05);
        // Away from the plateau the bias still falls steadily.
        for (std::size_t i = 1; i < 3; ++i)
          CHECK(g[i]->bias_sq_norm < g[i - 1]->bias_sq_norm);
      }
    }
  }
}
