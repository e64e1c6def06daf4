#include <string>

#include "doctest.h"
#include "mdflow/experiment_config.hpp"

using namespace mdflow;

namespace {

const char* kMinimalLq = R"(
problem.kind = lq_ball
problem.radius = 1.0
problem.m1 = 0.3
problem.n = 1.0
problem.m2 = 0.7
problem.m3 = 0.5
grid.lo = -1.0
grid.hi = 1.0
grid.nx = 16
grid.nt = 8
grid.T = 1.0
)";

bool has_error_path(const ConfigResult& res, const std::string& path) {
  for (const auto& e : res.errors)
    if (e.path == path) return true;
  return false;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("minimal config fills documented defaults") {
  const auto res = validate_config_text(kMinimalLq);
  REQUIRE(res.errors.empty());
  REQUIRE(res.config.has_value());
  const auto& cfg = *res.config;
  CHECK(cfg.eta0 == 0.1);
  CHECK(cfg.allowance == 0.1);
  CHECK(cfg.clamp_eps == 1e-6);
  CHECK(cfg.flow_horizon == 20.0);  // tau = 0 default
  CHECK(cfg.probe.t == 0.0);
  CHECK(cfg.probe.x[0] == 0.0);  // domain center
  CHECK(cfg.scheme.mode == SchemeConfig::Mode::Implicit);
  CHECK(cfg.scheme.tol == 1e-10);
  CHECK(cfg.seed == 0);
}

TEST_CASE("regularized problems default the flow horizon to 10/tau") {
  std::string text = kMinimalLq;
  text += "problem.tau = 0.5\n";
  const auto res = validate_config_text(text);
  REQUIRE(res.config.has_value());
  CHECK(res.config->flow_horizon == 20.0);
  std::string text2 = kMinimalLq;
  text2 += "problem.tau = 2.0\n";
  CHECK(validate_config_text(text2).config->flow_horizon == 5.0);
}

TEST_CASE("probe outside the domain names the offending field") {
  std::string text = kMinimalLq;
  text += "flow.probe_x = 3.0\n";
  const auto res = validate_config_text(text);
  CHECK_FALSE(res.config.has_value());
  CHECK(has_error_path(res, "flow.probe"));
}

TEST_CASE("reference weights must sum to one") {
  const std::string text = R"(
problem.kind = finite_action
problem.tau = 0.5
problem.actions = 2
problem.sigma = 0.8
problem.a0 = 0.6,0.5
problem.beta.1 = -1.0
problem.beta.2 = 1.0
problem.phi.1 = 0.0,0.0,1.0
problem.phi.2 = 0.3,0.0,0.0
problem.g = 0.0,0.0,0.5
grid.lo = -1.0
grid.hi = 1.0
grid.nx = 8
grid.nt = 4
grid.T = 1.0
)";
  const auto res = validate_config_text(text);
  CHECK_FALSE(res.config.has_value());
  CHECK(has_error_path(res, "problem.a0"));
}

TEST_CASE("unknown and duplicate keys are hard errors") {
  std::string text = kMinimalLq;
  text += "problem.radiu = 2.0\n";
  const auto res = validate_config_text(text);
  CHECK_FALSE(res.config.has_value());
  CHECK(has_error_path(res, "problem.radiu"));

  std::string dup = kMinimalLq;
  dup += "grid.nt = 10\n";
  const auto res2 = validate_config_text(dup);
  CHECK_FALSE(res2.config.has_value());
  CHECK(has_error_path(res2, "grid.nt"));
}

TEST_CASE("matrix shape violations are reported") {
  std::string text = kMinimalLq;
  text.replace(text.find("problem.m1 = 0.3"), 16, "problem.m1 = 1,2");
  const auto res = validate_config_text(text);
  CHECK_FALSE(res.config.has_value());
  CHECK(has_error_path(res, "problem.m1"));
}

TEST_CASE("normalized echo re-validates to the same configuration") {
  const auto res = validate_config_text(kMinimalLq);
  REQUIRE(res.config.has_value());
  const std::string normalized = res.config->normalized_text();
  const auto round = validate_config_text(normalized);
  REQUIRE(round.errors.empty());
  REQUIRE(round.config.has_value());
  CHECK(round.config->normalized_text() == normalized);
}

TEST_CASE("all shipped presets validate") {
  for (const char* name : {"lq_ball_1d_tau0.cfg", "lq_ball_1d_tau05.cfg", "lq_ball_2d_tau05.cfg",
                           "finite_action_p3.cfg"}) {
    const auto res = validate_config(std::string(MDFLOW_PRESET_DIR) + "/" + name);
    INFO(name);
    for (const auto& e : res.errors) {
      INFO(e.path, ": ", e.message);
    }
    CHECK(res.config.has_value());
  }
}

TEST_CASE("built problems pass their own validation") {
  for (const char* name : {"lq_ball_1d_tau0.cfg", "finite_action_p3.cfg"}) {
    const auto res = validate_config(std::string(MDFLOW_PRESET_DIR) + "/" + name);
    REQUIRE(res.config.has_value());
    const Grid grid(res.config->grid);
    const ProblemSpec spec = res.config->build_problem();
    CHECK_NOTHROW(spec.validate_on(grid));
  }
}

}  // TEST_SUITE
