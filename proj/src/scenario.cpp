#include "vocstiff/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "vocstiff/droop.hpp"
#include "vocstiff/oscillator.hpp"

namespace vocstiff {

bool operator==(const ScenarioSpec& a, const ScenarioSpec& b) {
  return a.name == b.name && a.description == b.description && a.model == b.model &&
         a.sim == b.sim && a.schedule == b.schedule && a.metrics == b.metrics &&
         a.analysis == b.analysis;
}

ScenarioSpec default_scenario() {
  ScenarioSpec s;
  s.model = default_model();
  return s;
}

std::string nearest(const std::string& key, const std::vector<std::string>& candidates) {
  std::string best;
  std::size_t best_d = static_cast<std::size_t>(-1);
  for (const auto& c : candidates) {
    std::vector<std::size_t> row(c.size() + 1);
    for (std::size_t j = 0; j <= c.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= key.size(); ++i) {
      std::size_t diag = row[0];
      row[0] = i;
      for (std::size_t j = 1; j <= c.size(); ++j) {
        const std::size_t up = row[j];
        row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (key[i - 1] == c[j - 1] ? 0u : 1u)});
        diag = up;
      }
    }
    if (row[c.size()] < best_d) {
      best_d = row[c.size()];
      best = c;
    }
  }
  return best;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

struct ParseFailure {
  std::string message;
};

double to_double(const std::string& w) {
  if (w == "inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto r = std::from_chars(w.data(), w.data() + w.size(), v);
  if (r.ec != std::errc() || r.ptr != w.data() + w.size())
    throw ParseFailure{"expected a number, got '" + w + "'"};
  return v;
}

std::size_t to_count(const std::string& w) {
  std::size_t v = 0;
  const auto r = std::from_chars(w.data(), w.data() + w.size(), v);
  if (r.ec != std::errc() || r.ptr != w.data() + w.size())
    throw ParseFailure{"expected a non-negative integer, got '" + w + "'"};
  return v;
}

bool to_bool(const std::string& w) {
  if (w == "true" || w == "1" || w == "yes") return true;
  if (w == "false" || w == "0" || w == "no") return false;
  throw ParseFailure{"expected true or false, got '" + w + "'"};
}

std::vector<double> to_doubles(const std::string& v, std::size_t n) {
  const auto words = split_words(v);
  if (n != 0 && words.size() != n)
    throw ParseFailure{"expected " + std::to_string(n) + " numbers"};
  std::vector<double> out;
  for (const auto& w : words) out.push_back(to_double(w));
  return out;
}

Window to_window(const std::string& v) {
  const auto d = to_doubles(v, 2);
  return {d[0], d[1]};
}

std::string window_text(Window w) { return fmt(w.t0) + " " + fmt(w.t1); }

const std::map<std::string, EventKind>& event_kinds() {
  static const std::map<std::string, EventKind> m = [] {
    std::map<std::string, EventKind> out;
    for (EventKind k : {EventKind::load_connect, EventKind::grid_frequency,
                        EventKind::grid_amplitude, EventKind::p_ref, EventKind::q_ref,
                        EventKind::vim_gain})
      out[to_string(k)] = k;
    return out;
  }();
  return m;
}

Event to_event(const std::string& v) {
  const auto w = split_words(v);
  if (w.size() < 3) throw ParseFailure{"event needs '<time> <kind> <value...>'"};
  Event e;
  e.time = to_double(w[0]);
  const auto it = event_kinds().find(w[1]);
  if (it == event_kinds().end()) {
    std::vector<std::string> names;
    for (const auto& [n, k] : event_kinds()) names.push_back(n);
    throw ParseFailure{"unknown event kind '" + w[1] + "' (did you mean '" + nearest(w[1], names) +
                       "'?)"};
  }
  e.kind = it->second;
  if (e.kind == EventKind::grid_amplitude) {
    if (w.size() != 5) throw ParseFailure{"grid_amplitude needs three per-phase values"};
    for (std::size_t p = 0; p < 3; ++p) e.amplitudes[p] = to_double(w[2 + p]);
  } else {
    if (w.size() != 3) throw ParseFailure{"event takes exactly one value"};
    if (e.kind == EventKind::load_connect) e.branch = to_count(w[2]);
    else e.value = to_double(w[2]);
  }
  return e;
}

std::string event_text(const Event& e) {
  std::string s = fmt(e.time) + " " + to_string(e.kind);
  switch (e.kind) {
    case EventKind::load_connect: return s + " " + std::to_string(e.branch);
    case EventKind::grid_amplitude:
      return s + " " + fmt(e.amplitudes[0]) + " " + fmt(e.amplitudes[1]) + " " + fmt(e.amplitudes[2]);
    default: return s + " " + fmt(e.value);
  }
}

// A scalar field of the document. Repeated keys (event, plateau, load sections) are
// handled by the parser and serializer directly.
struct Field {
  std::string section;
  std::string key;
  std::function<void(ScenarioSpec&, const std::string&)> set;
  std::function<std::string(const ScenarioSpec&)> get;
};

template <class Getter>
Field num(std::string sec, std::string key, Getter g) {
  return {std::move(sec), std::move(key),
          [g](ScenarioSpec& s, const std::string& v) { g(s) = to_double(v); },
          [g](const ScenarioSpec& s) { return fmt(g(const_cast<ScenarioSpec&>(s))); }};
}

template <class Getter>
Field count(std::string sec, std::string key, Getter g) {
  return {std::move(sec), std::move(key),
          [g](ScenarioSpec& s, const std::string& v) { g(s) = to_count(v); },
          [g](const ScenarioSpec& s) { return std::to_string(g(const_cast<ScenarioSpec&>(s))); }};
}

template <class Getter>
Field flag(std::string sec, std::string key, Getter g) {
  return {std::move(sec), std::move(key),
          [g](ScenarioSpec& s, const std::string& v) { g(s) = to_bool(v); },
          [g](const ScenarioSpec& s) {
            return std::string(g(const_cast<ScenarioSpec&>(s)) ? "true" : "false");
          }};
}

template <class Getter>
Field window(std::string sec, std::string key, Getter g) {
  return {std::move(sec), std::move(key),
          [g](ScenarioSpec& s, const std::string& v) { g(s) = to_window(v); },
          [g](const ScenarioSpec& s) { return window_text(g(const_cast<ScenarioSpec&>(s))); }};
}

const std::vector<Field>& fields() {
  using S = ScenarioSpec;
  static const std::vector<Field> f = {
      {"scenario", "name", [](S& s, const std::string& v) { s.name = v; },
       [](const S& s) { return s.name; }},
      {"scenario", "description", [](S& s, const std::string& v) { s.description = v; },
       [](const S& s) { return s.description; }},

      num("sim", "t_end", [](S& s) -> double& { return s.sim.t_end; }),
      num("sim", "dt_plant", [](S& s) -> double& { return s.sim.dt_plant; }),
      num("sim", "t_s", [](S& s) -> double& { return s.sim.t_s; }),
      count("sim", "log_every", [](S& s) -> std::size_t& { return s.sim.log_every; }),

      num("grid", "v_rms", [](S& s) -> double& { return s.model.grid.v_rms; }),
      num("grid", "omega", [](S& s) -> double& { return s.model.grid.omega; }),
      {"grid", "phase_scale",
       [](S& s, const std::string& v) {
         const auto d = to_doubles(v, 3);
         s.model.grid.phase_scale = {d[0], d[1], d[2]};
       },
       [](const S& s) {
         const auto& p = s.model.grid.phase_scale;
         return fmt(p[0]) + " " + fmt(p[1]) + " " + fmt(p[2]);
       }},
      num("grid", "r_g", [](S& s) -> double& { return s.model.circuit.r_g; }),
      num("grid", "l_g", [](S& s) -> double& { return s.model.circuit.l_g; }),

      num("filter", "r_f", [](S& s) -> double& { return s.model.circuit.r_f; }),
      num("filter", "l_f", [](S& s) -> double& { return s.model.circuit.l_f; }),
      num("filter", "c_f", [](S& s) -> double& { return s.model.circuit.c_f; }),

      flag("inverter", "enabled", [](S& s) -> bool& { return s.model.inverter_enabled; }),

      num("oscillator", "k_i", [](S& s) -> double& { return s.model.osc.k_i; }),
      num("oscillator", "k_v", [](S& s) -> double& { return s.model.osc.k_v; }),
      num("oscillator", "c_osc", [](S& s) -> double& { return s.model.osc.c_osc; }),
      num("oscillator", "xi", [](S& s) -> double& { return s.model.osc.xi; }),
      num("oscillator", "v_zn", [](S& s) -> double& { return s.model.osc.v_zn; }),
      num("oscillator", "omega_n", [](S& s) -> double& { return s.model.osc.omega_n; }),
      num("oscillator", "p_ref", [](S& s) -> double& { return s.model.osc.p_ref; }),
      num("oscillator", "q_ref", [](S& s) -> double& { return s.model.osc.q_ref; }),

      {"vim", "k",
       [](S& s, const std::string& v) { s.model.vim.m = s.model.vim.n = to_double(v); }, nullptr},
      num("vim", "m", [](S& s) -> double& { return s.model.vim.m; }),
      num("vim", "n", [](S& s) -> double& { return s.model.vim.n; }),
      num("vim", "r_v0", [](S& s) -> double& { return s.model.vim.r_v0; }),
      num("vim", "x_v0", [](S& s) -> double& { return s.model.vim.x_v0; }),
      num("vim", "omega_f", [](S& s) -> double& { return s.model.vim.omega_f; }),
      flag("vim", "clamp", [](S& s) -> bool& { return s.model.vim.clamp_non_negative; }),
      {"vim", "numerator",
       [](S& s, const std::string& v) {
         if (v == "omega_f_squared") s.model.vim.numerator = FilterNumerator::omega_f_squared;
         else if (v == "omega_f") s.model.vim.numerator = FilterNumerator::omega_f;
         else throw ParseFailure{"numerator is omega_f_squared or omega_f, got '" + v + "'"};
       },
       [](const S& s) {
         return std::string(s.model.vim.numerator == FilterNumerator::omega_f ? "omega_f"
                                                                               : "omega_f_squared");
       }},

      num("loops", "k_pv", [](S& s) -> double& { return s.model.gains.k_pv; }),
      num("loops", "k_iv", [](S& s) -> double& { return s.model.gains.k_iv; }),
      num("loops", "k_pi", [](S& s) -> double& { return s.model.gains.k_pi; }),
      num("loops", "k_ii", [](S& s) -> double& { return s.model.gains.k_ii; }),
      num("loops", "omega_v", [](S& s) -> double& { return s.model.gains.omega_v; }),
      num("loops", "omega_i", [](S& s) -> double& { return s.model.gains.omega_i; }),
      num("loops", "f_ff", [](S& s) -> double& { return s.model.gains.f_ff; }),
      num("loops", "i_max", [](S& s) -> double& { return s.model.gains.i_max; }),
      {"loops", "current_loop",
       [](S& s, const std::string& v) {
         if (v == "standard") s.model.current_loop = CurrentLoopVariant::standard;
         else if (v == "verbatim") s.model.current_loop = CurrentLoopVariant::verbatim;
         else throw ParseFailure{"current_loop is standard or verbatim, got '" + v + "'"};
       },
       [](const S& s) {
         return std::string(s.model.current_loop == CurrentLoopVariant::verbatim ? "verbatim"
                                                                                 : "standard");
       }},

      window("metrics", "pre", [](S& s) -> Window& { return s.metrics.pre; }),
      window("metrics", "post", [](S& s) -> Window& { return s.metrics.post; }),
      window("metrics", "onset", [](S& s) -> Window& { return s.metrics.onset; }),
      window("metrics", "trailing", [](S& s) -> Window& { return s.metrics.trailing; }),

      num("analysis", "eig_k_min", [](S& s) -> double& { return s.analysis.eig_k_min; }),
      num("analysis", "eig_k_max", [](S& s) -> double& { return s.analysis.eig_k_max; }),
      count("analysis", "eig_steps", [](S& s) -> std::size_t& { return s.analysis.eig_steps; }),
      {"analysis", "droop_k",
       [](S& s, const std::string& v) { s.analysis.droop_k = to_doubles(v, 0); },
       [](const S& s) {
         std::string out;
         for (double k : s.analysis.droop_k) out += (out.empty() ? "" : " ") + fmt(k);
         return out;
       }},
      {"analysis", "eig_form",
       [](S& s, const std::string& v) {
         if (v == "verbatim") s.analysis.eig_form = LoopForm::verbatim;
         else if (v == "standard") s.analysis.eig_form = LoopForm::standard;
         else if (v == "literal") s.analysis.eig_form = LoopForm::literal;
         else throw ParseFailure{"eig_form is verbatim, standard or literal, got '" + v + "'"};
       },
       [](const S& s) { return std::string(to_string(s.analysis.eig_form)); }},
      {"analysis", "eig_gains",
       [](S& s, const std::string& v) {
         if (v == "formula") s.analysis.eig_gains = StudyGains::formula;
         else if (v == "scenario") s.analysis.eig_gains = StudyGains::scenario;
         else throw ParseFailure{"eig_gains is formula or scenario, got '" + v + "'"};
       },
       [](const S& s) {
         return std::string(s.analysis.eig_gains == StudyGains::formula ? "formula" : "scenario");
       }},
      flag("analysis", "eig_recompute", [](S& s) -> bool& { return s.analysis.eig_recompute; }),
      num("analysis", "eig_v_min", [](S& s) -> double& { return s.analysis.eig_v_min; }),
      num("analysis", "droop_v_lo", [](S& s) -> double& { return s.analysis.droop_v_lo; }),
      num("analysis", "droop_v_hi", [](S& s) -> double& { return s.analysis.droop_v_hi; }),
      count("analysis", "droop_points",
            [](S& s) -> std::size_t& { return s.analysis.droop_points; }),
      num("analysis", "select_sag", [](S& s) -> double& { return s.analysis.select_sag; }),
      num("analysis", "select_retention",
          [](S& s) -> double& { return s.analysis.select_retention; }),
  };
  return f;
}

const std::vector<std::string> kSectionOrder = {"scenario", "sim", "grid", "filter", "inverter",
                                                "oscillator", "vim", "loops", "metrics",
                                                "analysis"};

// Keys handled outside the field table.
const std::map<std::string, std::vector<std::string>>& repeated_keys() {
  static const std::map<std::string, std::vector<std::string>> m = {
      {"load", {"r", "l", "connect_time"}},
      {"loads", {"clear"}},
      {"events", {"event"}},
      {"metrics", {"plateau"}}};
  return m;
}

std::vector<std::string> keys_of(const std::string& section) {
  std::vector<std::string> keys;
  for (const auto& f : fields())
    if (f.section == section) keys.push_back(f.key);
  if (auto it = repeated_keys().find(section); it != repeated_keys().end())
    keys.insert(keys.end(), it->second.begin(), it->second.end());
  return keys;
}

std::vector<std::string> all_sections() {
  std::vector<std::string> s = kSectionOrder;
  s.push_back("load");
  s.push_back("loads");
  s.push_back("events");
  return s;
}

std::string where(std::size_t line, std::size_t col) {
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

ScenarioSpec parse_scenario(const std::string& text) {
  ScenarioSpec s = default_scenario();
  std::vector<std::string> problems;
  std::string section;
  bool loads_cleared = false;
  bool in_load = false;

  std::istringstream is(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const std::size_t col = raw.find_first_not_of(" \t") + 1;

    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3)
        throw Error(ErrorCode::config, "syntax error at " + where(line_no, col) +
                                           ": malformed section header");
      section = trim(t.substr(1, t.size() - 2));
      const auto secs = all_sections();
      if (std::find(secs.begin(), secs.end(), section) == secs.end()) {
        problems.push_back("unknown section [" + section + "] at " + where(line_no, col) +
                           " (nearest: [" + nearest(section, secs) + "])");
        section = "?";
        continue;
      }
      in_load = section == "load";
      if (in_load) {
        if (!loads_cleared) {
          s.model.circuit.loads.clear();
          loads_cleared = true;
        }
        s.model.circuit.loads.push_back({});
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::config, "syntax error at " + where(line_no, col) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw Error(ErrorCode::config, "syntax error at " + where(line_no, col) + ": missing key");
    if (section.empty())
      throw Error(ErrorCode::config,
                  "syntax error at " + where(line_no, col) + ": key outside any section");
    if (section == "?") continue;  // already reported

    try {
      if (in_load) {
        auto& l = s.model.circuit.loads.back();
        if (key == "r") l.r = to_double(value);
        else if (key == "l") l.l = to_double(value);
        else if (key == "connect_time") l.connect_time = to_double(value);
        else goto unknown;
        continue;
      }
      if (section == "loads" && key == "clear") {
        if (to_bool(value)) {
          s.model.circuit.loads.clear();
          loads_cleared = true;
        }
        continue;
      }
      if (section == "events" && key == "event") {
        s.schedule.events.push_back(to_event(value));
        continue;
      }
      if (section == "metrics" && key == "plateau") {
        s.metrics.plateaus.push_back(to_window(value));
        continue;
      }
      {
        const auto& fs = fields();
        const auto it = std::find_if(fs.begin(), fs.end(), [&](const Field& f) {
          return f.section == section && f.key == key;
        });
        if (it == fs.end()) goto unknown;
        it->set(s, value);
        continue;
      }
    } catch (const ParseFailure& f) {
      const std::size_t vcol = raw.find(value, eq) + 1;
      problems.push_back("bad value for " + section + "." + key + " at " + where(line_no, vcol) +
                         ": " + f.message);
      continue;
    }
  unknown:
    problems.push_back("unknown key '" + key + "' in [" + section + "] at " +
                       where(line_no, col) + " (nearest valid key: '" +
                       nearest(key, keys_of(section)) + "')");
  }

  if (!problems.empty()) {
    std::string msg = problems.size() == 1 ? "" : std::to_string(problems.size()) + " problems: ";
    for (std::size_t i = 0; i < problems.size(); ++i) msg += (i ? "; " : "") + problems[i];
    throw Error(ErrorCode::config, msg);
  }
  try {
    s.model.validate();
    s.sim.validate();
    s.schedule.validate(s.model.circuit.loads.size());
  } catch (const Error& e) {
    throw Error(ErrorCode::config, std::string("invalid scenario: ") + e.what());
  }
  return s;
}

std::string serialize_scenario(const ScenarioSpec& s) {
  for (const std::string* t : {&s.name, &s.description})
    if (t->find_first_of("#\n\r") != std::string::npos)
      throw Error(ErrorCode::config, "scenario name and description cannot hold '#' or line breaks");
  std::ostringstream os;
  for (const auto& sec : kSectionOrder) {
    os << "[" << sec << "]\n";
    for (const auto& f : fields()) {
      if (f.section != sec || !f.get) continue;
      os << f.key << " = " << f.get(s) << "\n";
    }
    if (sec == "metrics")
      for (const auto& w : s.metrics.plateaus) os << "plateau = " << window_text(w) << "\n";
    os << "\n";
  }
  // Without this a document with no [load] section would keep the default branch.
  os << "[loads]\nclear = true\n\n";
  for (const auto& l : s.model.circuit.loads) {
    os << "[load]\nr = " << fmt(l.r) << "\nl = " << fmt(l.l) << "\nconnect_time = "
       << fmt(l.connect_time) << "\n\n";
  }
  os << "[events]\n";
  for (const auto& e : s.schedule.events) os << "event = " << event_text(e) << "\n";
  return os.str();
}

StudyParams study_for(const ScenarioSpec& spec) {
  const ModelParams& m = spec.model;
  const auto& c = m.circuit;
  StudyParams p;
  p.r_g = c.r_g;
  p.l_g = c.l_g;
  p.r_f = c.r_f;
  p.l_f = c.l_f;
  p.c_f = c.c_f;
  p.gains = spec.analysis.eig_gains == StudyGains::formula
                ? design_gains(c.l_f, c.r_f, c.c_f, m.gains.omega_i, m.gains.omega_v)
                : m.gains;
  p.vim = m.vim;
  p.omega0 = m.osc.omega_n;
  p.p0 = m.osc.p_ref;
  p.v_min = spec.analysis.eig_v_min * m.osc.v_zn;
  p.q_max = reactive_droop_plain(p.v_min, m.osc);
  p.form = spec.analysis.eig_form;
  p.validate();
  return p;
}

// ---------------------------------------------------------------- built-ins

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Reference network: 80 V / 60 Hz weak grid with the base load; a second branch is
// switched in at 5 s.
ScenarioSpec sag_event(const std::string& name, double k, bool inverter) {
  ScenarioSpec s = default_scenario();
  s.name = name;
  s.model.inverter_enabled = inverter;
  s.model.vim.m = s.model.vim.n = k;
  s.model.circuit.loads.push_back({2.5, 2e-3, kInf});
  s.schedule.events.push_back({5.0, EventKind::load_connect, 1, 0.0, {}});
  s.sim.t_end = 10.0;
  s.metrics.pre = {4.5, 4.95};
  s.metrics.post = {8.0, 10.0};
  s.metrics.onset = {5.0, 6.0};
  s.metrics.trailing = {9.0, 10.0};
  return s;
}

// Grid emulator: 100 V / 50 Hz source behind 2 mH, no local load.
ScenarioSpec emulator(const std::string& name, double k, double p_ref) {
  ScenarioSpec s;
  s.name = name;
  ModelParams& m = s.model;
  m.circuit.r_g = 0.6;
  m.circuit.l_g = 2e-3;
  m.circuit.loads.clear();
  m.grid.v_rms = 100.0;
  m.grid.omega = 2.0 * kPi * 50.0;
  m.osc.v_zn = 100.0;
  m.osc.omega_n = 2.0 * kPi * 50.0;
  m.osc.p_ref = p_ref;
  m.osc = design_oscillator(m.osc, OscillatorDesign{});
  m.gains = table_gains();
  m.vim.m = m.vim.n = k;
  s.sim.t_end = 4.0;
  s.metrics.pre = {1.5, 1.98};
  s.metrics.post = {3.5, 4.0};
  s.metrics.onset = {2.0, 2.5};
  s.metrics.trailing = {3.5, 4.0};
  s.analysis.droop_k = {0.0, 0.05, 0.15};
  s.analysis.droop_v_lo = 0.75;
  return s;
}

// Emulated bench runs reproduce trends only; the bench hardware is not modelled.
void mark_trend(ScenarioSpec& s) {
  s.description += " (trend-level: emulated grid source, absolute values not calibrated)";
}

ScenarioSpec make_builtin(const std::string& name) {
  if (name == "no-support") {
    ScenarioSpec s = sag_event(name, 0.0, false);
    s.description = "PCC sag from the load step with the inverter branch open";
    return s;
  }
  if (name == "sag-no-vim") {
    ScenarioSpec s = sag_event(name, 0.0, true);
    s.description = "load step sag, inverter connected without the adaptive impedance";
    return s;
  }
  if (name == "sag-vim-007") {
    ScenarioSpec s = sag_event(name, 0.07, true);
    s.description = "load step sag with the adaptive impedance at k = 0.07";
    return s;
  }
  if (name == "unbalanced-sag") {
    ScenarioSpec s = default_scenario();
    s.name = name;
    s.description = "phase-a grid amplitude drops 20% at 2 s, k = 0.07";
    s.model.vim.m = s.model.vim.n = 0.07;
    const double v = s.model.grid.v_rms;
    s.schedule.events.push_back({2.0, EventKind::grid_amplitude, 0, 0.0, {0.8 * v, v, v}});
    s.sim.t_end = 5.0;
    s.metrics.pre = {1.5, 1.98};
    s.metrics.post = {4.0, 5.0};
    s.metrics.onset = {2.0, 3.0};
    s.metrics.trailing = {4.0, 5.0};
    return s;
  }
  if (name == "freq-droop-steps") {
    ScenarioSpec s = default_scenario();
    s.name = name;
    s.description = "grid frequency lowered from 60 Hz to 59 Hz in five steps, PCC near nominal";
    s.model.circuit.loads.clear();
    for (int i = 1; i <= 5; ++i) {
      const double f = 60.0 - 0.2 * i;
      s.schedule.events.push_back({1.0 * i, EventKind::grid_frequency, 0, 2.0 * kPi * f, {}});
    }
    s.sim.t_end = 6.0;
    s.metrics.pre = {0.5, 0.98};
    s.metrics.post = {5.5, 6.0};
    s.metrics.onset = {1.0, 1.5};
    s.metrics.trailing = {5.5, 6.0};
    for (int i = 0; i <= 5; ++i) s.metrics.plateaus.push_back({i + 0.5, i + 0.98});
    return s;
  }
  if (name == "dispatch") {
    ScenarioSpec s = emulator(name, 0.1, 500.0);
    s.description = "three-phase P reference 1500 W, raised to 2400 W at 2 s, k = 0.1";
    s.schedule.events.push_back({2.0, EventKind::p_ref, 0, 800.0, {}});
    s.metrics.plateaus = {{1.5, 1.98}, {3.5, 4.0}};
    mark_trend(s);
    return s;
  }
  for (const char* sag : {"5", "25"}) {
    for (const char* kk : {"005", "015"}) {
      if (name == std::string("sag") + sag + "-k" + kk) {
        const double k = std::atof(kk) / 100.0;
        const double depth = std::atof(sag) / 100.0;
        ScenarioSpec s = emulator(name, k, 500.0);
        s.description = "grid emulator amplitude sag of " + std::string(sag) + "% at 2 s";
        const double v = (1.0 - depth) * s.model.grid.v_rms;
        s.schedule.events.push_back({2.0, EventKind::grid_amplitude, 0, 0.0, {v, v, v}});
        mark_trend(s);
        return s;
      }
    }
  }
  for (const char* f : {"4985", "4970"}) {
    for (const char* kk : {"005", "015"}) {
      if (name == std::string("fdip-") + f + "-k" + kk) {
        const double k = std::atof(kk) / 100.0;
        const double hz = std::atof(f) / 100.0;
        ScenarioSpec s = emulator(name, k, 500.0);
        s.description = "grid emulator frequency dip to " + fmt(hz) + " Hz at 2 s";
        s.schedule.events.push_back({2.0, EventKind::grid_frequency, 0, 2.0 * kPi * hz, {}});
        mark_trend(s);
        return s;
      }
    }
  }
  std::string msg = "unknown scenario '" + name + "' (nearest: '" + nearest(name, builtin_names()) +
                    "'); built-ins:";
  for (const auto& n : builtin_names()) msg += " " + n;
  throw Error(ErrorCode::config, msg);
}

}  // namespace

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names = {
      "no-support",      "sag-no-vim",      "sag-vim-007",     "freq-droop-steps",
      "dispatch",        "sag5-k005",       "sag5-k015",       "sag25-k005",
      "sag25-k015",      "fdip-4985-k005",  "fdip-4985-k015",  "fdip-4970-k005",
      "fdip-4970-k015",  "unbalanced-sag"};
  return names;
}

ScenarioSpec builtin(const std::string& name) { return make_builtin(name); }

}  // namespace vocstiff
