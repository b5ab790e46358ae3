#include <doctest.h>

#include "vocstiff/scenario.hpp"

using namespace vocstiff;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config);
    return e.what();
  }
  return {};
}

bool contains(const std::string& s, const std::string& part) {
  return s.find(part) != std::string::npos;
}

}  // namespace

TEST_CASE("an empty document is the reference scenario") {
  CHECK(parse_scenario("") == default_scenario());
  CHECK(parse_scenario("# nothing here\n\n") == default_scenario());
  const ScenarioSpec d = default_scenario();
  CHECK(d.model == default_model());
  CHECK(d.model.circuit.loads.size() == 1);
}

TEST_CASE("overrides touch only what they name") {
  const ScenarioSpec d = default_scenario();
  const ScenarioSpec s = parse_scenario("[vim]\nk = 0.12  # both slopes\n");
  CHECK(s.model.vim.m == 0.12);
  CHECK(s.model.vim.n == 0.12);
  ScenarioSpec back = s;
  back.model.vim.m = d.model.vim.m;
  back.model.vim.n = d.model.vim.n;
  CHECK(back == d);

  const ScenarioSpec t = parse_scenario("[grid]\nv_rms = 90\n[sim]\nt_end = 3\n");
  CHECK(t.model.grid.v_rms == 90.0);
  CHECK(t.sim.t_end == 3.0);
  CHECK(t.model.osc == d.model.osc);
}

TEST_CASE("loads and events") {
  const ScenarioSpec s = parse_scenario(
      "[load]\nr = 3\nl = 0.01\n[load]\nr = 2\nl = 0.002\nconnect_time = inf\n"
      "[events]\nevent = 0.5 load-connect 1\nevent = 0.7 p-ref 400\n"
      "event = 0.8 grid-amplitude 70 80 80\n");
  REQUIRE(s.model.circuit.loads.size() == 2);
  CHECK(s.model.circuit.loads[0].r == 3.0);
  CHECK(std::isinf(s.model.circuit.loads[1].connect_time));
  REQUIRE(s.schedule.events.size() == 3);
  CHECK(s.schedule.events[0].kind == EventKind::load_connect);
  CHECK(s.schedule.events[0].branch == 1);
  CHECK(s.schedule.events[1].value == 400.0);
  CHECK(s.schedule.events[2].amplitudes[0] == 70.0);
  const ScenarioSpec none = parse_scenario("[loads]\nclear = true\n");
  CHECK(none.model.circuit.loads.empty());
}

TEST_CASE("errors name the place and the nearest key") {
  const std::string e = error_of("[vim]\nomegaf = 100\n");
  CHECK(contains(e, "omega_f"));
  CHECK(contains(e, "line 2"));
  const std::string many = error_of("[grid]\nv_rsm = 1\n[sim]\nt_edn = 2\n");
  CHECK(contains(many, "v_rms"));
  CHECK(contains(many, "t_end"));
  CHECK(contains(error_of("[gird]\n"), "grid"));
  CHECK(contains(error_of("[grid]\nv_rms = abc\n"), "number"));
  CHECK(contains(error_of("[grid\n"), "column"));
  CHECK(contains(error_of("[events]\nevent = 1 p-rf 3\n"), "p-ref"));
  // Well-formed but invalid models are rejected after parsing.
  CHECK(!error_of("[filter]\nl_f = -1\n").empty());
  CHECK(!error_of("[events]\nevent = 1 load-connect 4\n").empty());
  CHECK(contains(nearest("omegaf", {"omega_f", "omega_n", "xi"}), "omega_f"));
  CHECK(nearest("x", {}).empty());
}

TEST_CASE("every built-in survives a serialize round trip") {
  for (const std::string& name : builtin_names()) {
    CAPTURE(name);
    const ScenarioSpec s = builtin(name);
    CHECK(s.name == name);
    const std::string text = serialize_scenario(s);
    const ScenarioSpec back = parse_scenario(text);
    CHECK(back == s);
    CHECK(serialize_scenario(back) == text);
  }
  CHECK(builtin_names().size() == 14);
  try {
    builtin("sag-vim-07");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(contains(e.what(), "sag-vim-007"));
  }
  ScenarioSpec bad = default_scenario();
  bad.name = "a # b";
  CHECK_THROWS_AS(serialize_scenario(bad), Error);
}

TEST_CASE("built-in contents") {
  SUBCASE("load-step sag") {
    const ScenarioSpec s = builtin("sag-no-vim");
    REQUIRE(s.model.circuit.loads.size() == 2);
    CHECK(s.model.circuit.loads[1].r == 2.5);
    CHECK(s.model.circuit.loads[1].l == doctest::Approx(2e-3));
    REQUIRE(s.schedule.events.size() == 1);
    CHECK(s.schedule.events[0].time == 5.0);
    CHECK(s.schedule.events[0].kind == EventKind::load_connect);
    CHECK(s.model.vim.m == 0.0);
    CHECK(builtin("sag-vim-007").model.vim.m == 0.07);
    CHECK(!builtin("no-support").model.inverter_enabled);
  }
  SUBCASE("dispatch totals") {
    const ScenarioSpec s = builtin("dispatch");
    CHECK(3 * s.model.osc.p_ref == doctest::Approx(1500));
    REQUIRE(s.schedule.events.size() == 1);
    CHECK(3 * s.schedule.events[0].value == doctest::Approx(2400));
    CHECK(contains(s.description, "trend-level"));
  }
  SUBCASE("frequency steps") {
    const ScenarioSpec s = builtin("freq-droop-steps");
    REQUIRE(s.schedule.events.size() == 5);
    CHECK(s.model.grid.omega == doctest::Approx(2 * kPi * 60));
    CHECK(s.schedule.events.back().value == doctest::Approx(2 * kPi * 59));
    CHECK(s.metrics.plateaus.size() == 6);
  }
  SUBCASE("unbalanced sag touches phase a only") {
    const ScenarioSpec s = builtin("unbalanced-sag");
    REQUIRE(s.schedule.events.size() == 1);
    const auto& a = s.schedule.events[0].amplitudes;
    CHECK(a[0] == doctest::Approx(0.8 * s.model.grid.v_rms));
    CHECK(a[1] == s.model.grid.v_rms);
    CHECK(a[2] == s.model.grid.v_rms);
  }
}

TEST_CASE("small-signal study of the reference scenario") {
  const StudyParams a = study_for(default_scenario());
  const StudyParams b = default_study();
  CHECK(a.gains.k_pi == doctest::Approx(b.gains.k_pi));
  CHECK(a.gains.k_iv == doctest::Approx(b.gains.k_iv));
  CHECK(a.v_min == doctest::Approx(b.v_min));
  CHECK(a.q_max == doctest::Approx(b.q_max));
  CHECK(a.p0 == doctest::Approx(b.p0));
  CHECK(a.form == b.form);
  const StudyParams t = study_for(parse_scenario("[analysis]\neig_gains = scenario\n"));
  CHECK(t.gains.k_pv == default_model().gains.k_pv);
}
