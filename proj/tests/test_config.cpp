#include <gtest/gtest.h>

#include <sstream>
#include <string>

#include "nsync/io.hpp"

using namespace nsync;

namespace {

std::string error_of(auto&& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, DumpParsesBackToItself) {
  RunConfig cfg;
  apply_override(cfg, "model.c=0.0512345678901234");
  apply_override(cfg, "sim.ics=1,2;3,4;-5.5,0.1");
  apply_override(cfg, "mde.variance_domain=strict");
  apply_override(cfg, "sim.seed=18446744073709551615");
  const std::string text = dump_config(cfg);
  RunConfig back;
  std::istringstream in(text);
  parse_config(back, in);
  EXPECT_EQ(dump_config(back), text);
  EXPECT_EQ(back.model.c, cfg.model.c);
  EXPECT_EQ(back.sim.ics.size(), 3u);
  EXPECT_EQ(back.sim.run.seed, 18446744073709551615ull);
}

TEST(Config, DefaultsMatchReferenceSetup) {
  const RunConfig cfg;
  EXPECT_EQ(cfg.model.c, 0.04);
  EXPECT_EQ(cfg.model.mu, 0.7);
  EXPECT_EQ(cfg.model.Q, 0.3);
  EXPECT_EQ(cfg.forcing.P, 0.2);
  EXPECT_EQ(cfg.forcing.rho, 2e-5);
  EXPECT_EQ(cfg.sim.run.dt, 0.005);
  EXPECT_EQ(cfg.mct.grid.grid_m, 5);
  EXPECT_EQ(cfg.mct.grid.epsilon, 1e-5);
  EXPECT_NO_THROW(validate(cfg));
}

TEST(Config, UnknownKeyIsNamed) {
  RunConfig cfg;
  EXPECT_NE(error_of([&] { apply_override(cfg, "model.gamma=1"); }).find("model.gamma"),
            std::string::npos);
  std::istringstream in("[model]\nc = 0.05\n\n[sweep]\nbogus = 3\n");
  const auto msg = error_of([&] { parse_config(cfg, in, "run.cfg"); });
  EXPECT_NE(msg.find("run.cfg:5"), std::string::npos);
  EXPECT_NE(msg.find("sweep.bogus"), std::string::npos);
}

TEST(Config, MalformedInput) {
  RunConfig cfg;
  for (const char* text : {"c = 1\n", "[model\n", "[model]\nc 1\n", "[model]\nc = abc\n",
                           "[model]\nc = 1.0x\n", "[sweep]\nn_steps = 1.5\n",
                           "[mde]\nvariance_domain = loose\n", "[sweep]\nq0 = 1,2,3\n",
                           "[sim]\nics = 1,2;3\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(parse_config(cfg, in), ConfigError) << text;
  }
  EXPECT_THROW(apply_override(cfg, "c=1"), ConfigError);
  EXPECT_THROW(apply_override(cfg, "model.c"), ConfigError);
}

TEST(Config, CommentsAndWhitespace) {
  RunConfig cfg;
  std::istringstream in("# header\n  [ forcing ]  \n omega =  0.85  # inline\n\n");
  parse_config(cfg, in);
  EXPECT_EQ(cfg.forcing.omega, 0.85);
}

TEST(Config, OverridesApplyInOrder) {
  RunConfig cfg;
  apply_override(cfg, "mct.omegas=0.86,0.9");
  apply_override(cfg, "mct.omegas=0.7");
  EXPECT_EQ(cfg.mct.omegas, std::vector<double>{0.7});
}

TEST(Config, ValidationNamesSection) {
  auto check = [](const char* assignment, const char* section) {
    RunConfig cfg;
    apply_override(cfg, assignment);
    const auto msg = error_of([&] { validate(cfg); });
    EXPECT_NE(msg.find(section), std::string::npos) << assignment << " -> " << msg;
  };
  check("sweep.omega_hi=0.6", "[sweep]");
  check("model.c=-1", "[model]");
  check("mct.epsilon=0", "[mct]");
  check("continuation.c_seed=0.1", "[continuation]");
  check("sim.dt=0", "[sim]");
  check("forcing.omega=0", "[forcing]");
  check("mde.steps_per_period=0", "[mde]");
  check("poincare.iters=0", "[poincare]");
}

TEST(Config, ForcingAndMdeMapping) {
  RunConfig cfg;
  apply_override(cfg, "forcing.type=harmonic_white");
  apply_override(cfg, "forcing.s=0.3");
  const auto spec = forcing_spec(cfg);
  ASSERT_TRUE(std::holds_alternative<HarmonicWhite>(spec));
  EXPECT_EQ(std::get<HarmonicWhite>(spec).s, 0.3);
  apply_override(cfg, "mde.phase_factor=decaying");
  const auto p = mde_params(cfg, 0.91);
  EXPECT_EQ(p.omega, 0.91);
  EXPECT_EQ(p.phase_factor_mode, PhaseFactorMode::decaying);
  EXPECT_EQ(p.variance_domain, VarianceDomain::clamp);
}

TEST(Io, AuditHeaderIsCommentedDump) {
  RunConfig cfg;
  cfg.sim.run.seed = 77;
  const auto h = audit_header("sweep", cfg);
  std::istringstream in(h);
  std::string line, body;
  for (int n = 0; std::getline(in, line); ++n) {
    ASSERT_EQ(line.front(), '#');
    if (n >= 2 && line.size() > 2) body += line.substr(2) + "\n";
  }
  EXPECT_NE(h.find("# seed = 77"), std::string::npos);
  RunConfig back;
  std::istringstream bin(body);
  parse_config(back, bin);
  EXPECT_EQ(dump_config(back), dump_config(cfg));
}

TEST(Io, PlotScriptGrammar) {
  PlotScript s;
  s.figure("Response").xlabel("omega").ylabel("ptp").yscale("log");
  s.series("forward", "sweep.csv", "omega", "ptp_msq", "points", "direction:forward");
  EXPECT_EQ(s.str(),
            "figure Response\nxlabel omega\nylabel ptp\nyscale log\n"
            "series forward file=sweep.csv x=omega y=ptp_msq where=direction:forward style=points\n");
}
