#pragma once

#include <string>
#include <vector>

#include "vocstiff/sim.hpp"
#include "vocstiff/smallsignal.hpp"

namespace vocstiff {

enum class StudyGains {
  formula,   // bandwidth formulas on the scenario's filter and omega_v, omega_i
  scenario,  // the scenario's loop gains as written
};

struct AnalysisRequest {
  double eig_k_min = 0.0;
  double eig_k_max = 0.5;
  std::size_t eig_steps = 50;
  LoopForm eig_form = LoopForm::verbatim;
  StudyGains eig_gains = StudyGains::formula;
  bool eig_recompute = true;  // operating point per k, else the one at eig_k_min
  double eig_v_min = 0.75;    // PCC voltage of the operating point, fraction of v_zn
  std::vector<double> droop_k{0.0, 0.05, 0.07, 0.15};
  double droop_v_lo = 0.7;  // fractions of v_zn
  double droop_v_hi = 1.0;
  std::size_t droop_points = 61;
  double select_sag = 0.25;
  double select_retention = 0.8;

  friend bool operator==(const AnalysisRequest&, const AnalysisRequest&) = default;
};

struct ScenarioSpec {
  std::string name = "custom";
  std::string description;
  ModelParams model;
  SimConfig sim;
  EventSchedule schedule;
  MetricsRequest metrics;
  AnalysisRequest analysis;
};

bool operator==(const ScenarioSpec& a, const ScenarioSpec& b);

/// Reference network with the designed oscillator, base load and listed gains.
ScenarioSpec default_scenario();

/// Parses the sectioned key = value format. All unknown keys are reported together,
/// each with the closest valid key. Throws Error(config) with line:column context.
ScenarioSpec parse_scenario(const std::string& text);

/// Writes every field, so parse_scenario(serialize_scenario(s)) == s.
std::string serialize_scenario(const ScenarioSpec& spec);

/// Small-signal study on the scenario's network and oscillator: operating point at the
/// largest-Q, lowest-V corner, gains and loop form as the analysis section asks.
StudyParams study_for(const ScenarioSpec& spec);

const std::vector<std::string>& builtin_names();

/// Throws Error(config) listing the valid names for an unknown one.
ScenarioSpec builtin(const std::string& name);

/// Closest string by edit distance; empty when candidates is empty.
std::string nearest(const std::string& key, const std::vector<std::string>& candidates);

}  // namespace vocstiff
