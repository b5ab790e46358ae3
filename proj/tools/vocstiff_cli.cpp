// Command-line front end over the C API.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "vocstiff/vocstiff.h"

namespace {

enum Exit { kOk = 0, kUsage = 1, kConfig = 2, kNumeric = 3 };

int exit_for(vs_status s) {
  switch (s) {
    case VS_OK: return kOk;
    case VS_INVALID_ARGUMENT: return kUsage;
    case VS_CONFIG:
    case VS_IO: return kConfig;
    default: return kNumeric;
  }
}

struct Failure {
  int code;
};

void check(vs_status s) {
  if (s == VS_OK) return;
  std::fprintf(stderr, "error (%s): %s\n", vs_status_name(s), vs_last_error());
  throw Failure{exit_for(s)};
}

struct Scenario {
  vs_scenario* h = nullptr;
  Scenario() = default;
  Scenario(const Scenario&) = delete;
  Scenario& operator=(const Scenario&) = delete;
  ~Scenario() { vs_scenario_free(h); }
};

struct Result {
  vs_result* h = nullptr;
  ~Result() { vs_result_free(h); }
};

// "section.key=value" -> "[section]\nkey = value"
std::string override_text(const std::vector<std::string>& sets) {
  std::string text;
  for (const auto& s : sets) {
    const auto dot = s.find('.');
    const auto eq = s.find('=');
    if (dot == std::string::npos || eq == std::string::npos || dot > eq) {
      std::fprintf(stderr, "error: --set expects section.key=value, got '%s'\n", s.c_str());
      throw Failure{kUsage};
    }
    text += "[" + s.substr(0, dot) + "]\n" + s.substr(dot + 1, eq - dot - 1) + " = " +
            s.substr(eq + 1) + "\n";
  }
  return text;
}

// A path that exists is read as a scenario file, anything else as a built-in name. An
// empty source is the reference scenario.
void open_scenario(Scenario& sc, const std::string& source, const std::vector<std::string>& sets) {
  if (source.empty()) check(vs_scenario_parse("", &sc.h));
  else if (std::filesystem::exists(source)) check(vs_scenario_load(source.c_str(), &sc.h));
  else if (source.find('/') != std::string::npos || source.find('.') != std::string::npos) {
    std::fprintf(stderr, "error (io): no such scenario file '%s'\n", source.c_str());
    throw Failure{kConfig};
  } else check(vs_scenario_builtin(source.c_str(), &sc.h));
  if (!sets.empty()) check(vs_scenario_override(sc.h, override_text(sets).c_str()));
}

std::string join(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

int cmd_run(const std::string& source, const std::vector<std::string>& sets,
            const std::string& out_dir, bool quiet) {
  Scenario sc;
  open_scenario(sc, source, sets);
  Result r;
  check(vs_run(sc.h, &r.h));
  const std::string name = vs_scenario_name(sc.h);
  std::filesystem::create_directories(out_dir);
  const std::string csv = join(out_dir, name + ".csv");
  const std::string met = join(out_dir, name + ".metrics.txt");
  check(vs_result_write_csv(r.h, csv.c_str()));
  check(vs_result_write_metrics(r.h, met.c_str()));
  if (!quiet) {
    vs_metrics m;
    check(vs_result_metrics(r.h, &m));
    std::printf("scenario: %s\n", name.c_str());
    std::printf("sag_percent: %.4g\np_pre_w: %.6g\nq_pre_var: %.6g\np_post_w: %.6g\nq_post_var: %.6g\n",
                m.sag_percent, m.p_pre, m.q_pre, m.p_post, m.q_post);
    std::printf("p_oscillation_onset_w: %.6g\np_oscillation_trailing_w: %.6g\n",
                m.p_oscillation_onset, m.p_oscillation);
    std::printf("saturation_duty: %.4g\nlast_saturated_s: %.6g\n", m.saturation_duty,
                m.last_saturated_time);
    for (size_t i = 0; i < m.plateaus; ++i) {
      double p, f, vz;
      check(vs_result_plateau(r.h, i, &p, &f, &vz));
      std::printf("plateau_%zu: p_w %.6g, f_hz %.6g, vz_v %.6g\n", i, p, f, vz);
    }
    if (m.plateaus >= 2) std::printf("droop_slope_hz_per_w: %.6g\n", m.droop_slope);
    std::printf("log: %s\nmetrics: %s\n", csv.c_str(), met.c_str());
  }
  return kOk;
}

int cmd_eig(const std::string& source, const std::vector<std::string>& sets,
            const std::string& loci) {
  Scenario sc;
  open_scenario(sc, source, sets);
  vs_critical_gain c;
  check(vs_eig_sweep(sc.h, loci.empty() ? nullptr : loci.c_str(), &c));
  if (c.found) std::printf("k_crit: %.4f\nbracket: %.6f %.6f\n", c.k, c.lo, c.hi);
  else std::printf("k_crit: none in range\n");
  std::printf("evaluations: %zu\n", c.evaluations);
  if (!loci.empty()) std::printf("loci: %s\n", loci.c_str());
  return kOk;
}

int cmd_droop(const std::string& source, const std::vector<std::string>& sets,
              const std::string& out) {
  Scenario sc;
  open_scenario(sc, source, sets);
  check(vs_droop_curves(sc.h, out.c_str()));
  std::printf("droop curves: %s\n", out.c_str());
  return kOk;
}

int cmd_select(const std::string& source, const std::vector<std::string>& sets, double k_max,
               const std::string& table) {
  Scenario sc;
  open_scenario(sc, source, sets);
  vs_k_selection s;
  check(vs_select_k(sc.h, k_max, table.empty() ? nullptr : table.c_str(), &s));
  std::printf("k_max: %.4f\n", s.k_max);
  if (s.feasible) std::printf("k: %.4f\n", s.k);
  else std::printf("k: infeasible (binding: %s)\n", s.binding);
  return s.feasible ? kOk : kNumeric;
}

int cmd_list(const std::string& show) {
  if (!show.empty()) {
    Scenario sc;
    check(vs_scenario_builtin(show.c_str(), &sc.h));
    char* text = nullptr;
    check(vs_scenario_serialize(sc.h, &text));
    std::fputs(text, stdout);
    vs_string_free(text);
    return kOk;
  }
  for (size_t i = 0; i < vs_builtin_count(); ++i) std::printf("%s\n", vs_builtin_name(i));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grid-forming inverter with adaptive virtual impedance: simulation and analysis"};
  app.require_subcommand(1);

  std::string source;
  std::vector<std::string> sets;
  std::string out_dir = ".";
  bool quiet = false;
  auto* run = app.add_subcommand("run", "time-domain run of a scenario file or built-in");
  run->add_option("scenario", source, "scenario file or built-in name")->required();
  run->add_option("--set", sets, "override, section.key=value (repeatable)");
  run->add_option("-o,--out-dir", out_dir, "directory for <name>.csv and <name>.metrics.txt");
  run->add_flag("-q,--quiet", quiet, "no metrics on stdout");

  std::string eig_source;
  std::vector<std::string> eig_sets;
  std::string loci;
  auto* eig = app.add_subcommand("eig-sweep", "eigenvalue loci against k and the critical gain");
  eig->add_option("scenario", eig_source, "scenario file or built-in name; default is the reference network");
  eig->add_option("--set", eig_sets, "override, section.key=value (repeatable)");
  eig->add_option("--loci", loci, "CSV of eigenvalues per k");

  std::string droop_source;
  std::vector<std::string> droop_sets;
  std::string droop_out = "droop.csv";
  auto* droop = app.add_subcommand("droop", "reactive droop curves with and without the impedance");
  droop->add_option("scenario", droop_source, "scenario file or built-in name; default is the reference network");
  droop->add_option("--set", droop_sets, "override, section.key=value (repeatable)");
  droop->add_option("-o,--out", droop_out, "CSV path");

  std::string sel_source;
  std::vector<std::string> sel_sets;
  double k_max = 0.0;
  std::string table;
  auto* sel = app.add_subcommand("select-k", "smallest k meeting the current and retention limits");
  sel->add_option("scenario", sel_source, "scenario file or built-in name; default is the reference network");
  sel->add_option("--set", sel_sets, "override, section.key=value (repeatable)");
  sel->add_option("--k-max", k_max, "upper bound for k; default is the critical gain");
  sel->add_option("--table", table, "CSV of the trade-off table");

  std::string show;
  auto* list = app.add_subcommand("list", "built-in scenarios");
  list->add_option("--show", show, "print one built-in in the config format");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return cmd_run(source, sets, out_dir, quiet);
    if (*eig) return cmd_eig(eig_source, eig_sets, loci);
    if (*droop) return cmd_droop(droop_source, droop_sets, droop_out);
    if (*sel) return cmd_select(sel_source, sel_sets, k_max, table);
    if (*list) return cmd_list(show);
  } catch (const Failure& f) {
    return f.code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kConfig;
  }
  return kUsage;
}
