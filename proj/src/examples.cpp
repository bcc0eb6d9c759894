#include "pireg/examples.hpp"

namespace pireg {

ScenarioFile example_41() {
  ScenarioFile f;
  f.outflow.members = {OutflowMember{1.0, 0.1, 1.0}};
  f.scenario.a = 16.8;
  f.scenario.b_min = 0.0;
  f.scenario.b_max = 3.1;
  f.scenario.x_star = 10.0;
  f.scenario.u_star = 1.0;
  f.scenario.v_star = outflow(f.outflow, 0, f.scenario.x_star, f.scenario.a) - f.scenario.u_star;
  f.gains = Gains{0.9, 1.08};
  SectorBounds h2;
  h2.r = -0.98;
  h2.q = 1.0;
  h2.L = 0.99;
  h2.M = 1.025;
  h2.lambda1 = 0.82;
  h2.gamma1 = 0.17;
  h2.lambda2 = 0.6;
  h2.gamma2 = 0.39;
  f.h2 = h2;
  return f;
}

ScenarioFile example_42() {
  ScenarioFile f;
  f.outflow.members = {OutflowMember{1.0, 0.1, 2.0}};
  f.scenario.a = 20.0;
  f.scenario.b_min = 0.0;
  f.scenario.b_max = 3.0;
  f.scenario.x_star = 3.0;
  f.scenario.v_star = 1.0;
  f.scenario.u_star = outflow(f.outflow, 0, f.scenario.x_star, f.scenario.a) - f.scenario.v_star;
  f.gains = Gains{1.0, 1.0};
  return f;
}

ScenarioFile builtin_example(std::string_view id) {
  if (id == "4.1") return example_41();
  if (id == "4.2") return example_42();
  throw DomainError("unknown example id '" + std::string(id) + "' (use 4.1 or 4.2)");
}

}  // namespace pireg
