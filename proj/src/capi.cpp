#include "vocstiff/vocstiff.h"

#include <atomic>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <unistd.h>

#include "vocstiff/droop.hpp"
#include "vocstiff/scenario.hpp"

struct vs_scenario {
  vocstiff::ScenarioSpec spec;
};

struct vs_result {
  std::string name;
  std::string description;
  vocstiff::RunResult run;
  vocstiff::Metrics metrics;
};

namespace {

using namespace vocstiff;

thread_local std::string g_last_error;

vs_status code_of(ErrorCode c) {
  switch (c) {
    case ErrorCode::ok: return VS_OK;
    case ErrorCode::invalid_argument: return VS_INVALID_ARGUMENT;
    case ErrorCode::numeric_blowup: return VS_NUMERIC_BLOWUP;
    case ErrorCode::oscillator_collapse: return VS_OSCILLATOR_COLLAPSE;
    case ErrorCode::undefined_angle: return VS_UNDEFINED_ANGLE;
    case ErrorCode::singular_system: return VS_SINGULAR_SYSTEM;
    case ErrorCode::infeasible_operating_point: return VS_INFEASIBLE_OPERATING_POINT;
    case ErrorCode::assembly: return VS_ASSEMBLY;
    case ErrorCode::solver: return VS_SOLVER;
    case ErrorCode::config: return VS_CONFIG;
    case ErrorCode::io: return VS_IO;
  }
  return VS_INTERNAL;
}

vs_status fail(vs_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

// Every entry point goes through here so no exception crosses the C boundary.
vs_status guarded(const std::function<void()>& body) {
  try {
    body();
    g_last_error.clear();
    return VS_OK;
  } catch (const Error& e) {
    return fail(code_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(VS_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(VS_INTERNAL, e.what());
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::invalid_argument, what);
}

std::mutex& path_lock(const std::string& path) {
  static std::mutex registry;
  static std::map<std::string, std::mutex> locks;
  std::lock_guard g(registry);
  return locks[std::filesystem::absolute(path).lexically_normal().string()];
}

// Writes to a sibling temporary and renames it over the target.
void write_atomic(const std::string& path, const std::function<void(std::ostream&)>& fill) {
  require(!path.empty(), "output path is empty");
  static std::atomic<unsigned> counter{0};
  std::lock_guard g(path_lock(path));
  const std::string tmp =
      path + ".tmp" + std::to_string(::getpid()) + "_" + std::to_string(counter++);
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(ErrorCode::io, "cannot open " + tmp + " for writing");
    fill(os);
    os.flush();
    if (!os) {
      os.close();
      std::filesystem::remove(tmp);
      throw Error(ErrorCode::io, "write failed for " + path);
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error(ErrorCode::io, "cannot rename onto " + path + ": " + ec.message());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::io, "cannot read " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void write_metrics_text(std::ostream& os, const vs_result& r) {
  const Metrics& m = r.metrics;
  char buf[64];
  auto put = [&](const char* key, double v) {
    std::snprintf(buf, sizeof buf, "%.9g", v);
    os << key << ": " << buf << '\n';
  };
  os << "scenario: " << r.name << '\n';
  if (!r.description.empty()) os << "description: " << r.description << '\n';
  put("sag_percent", m.sag_percent);
  put("p_pre_w", m.p_pre);
  put("q_pre_var", m.q_pre);
  put("p_post_w", m.p_post);
  put("q_post_var", m.q_post);
  put("p_oscillation_onset_w", m.p_oscillation_onset);
  put("p_oscillation_trailing_w", m.p_oscillation);
  put("saturation_duty", m.saturation_duty);
  put("last_saturated_s", r.run.stats.last_saturated_time);
  for (std::size_t p = 0; p < kPhases; ++p)
    put(("saturated_ticks_" + std::string(1, char('a' + p))).c_str(),
        static_cast<double>(r.run.stats.saturated_ticks[p]));
  put("freeze_violations", static_cast<double>(r.run.stats.freeze_violations));
  for (std::size_t i = 0; i < m.plateau_p.size(); ++i) {
    const std::string k = "plateau_" + std::to_string(i);
    put((k + "_p_w").c_str(), m.plateau_p[i]);
    put((k + "_f_hz").c_str(), m.plateau_f[i]);
    put((k + "_vz_v").c_str(), m.plateau_vz[i]);
  }
  if (m.plateau_p.size() >= 2) put("droop_slope_hz_per_w", m.droop_slope);
}

}  // namespace

extern "C" {

const char* vs_last_error(void) { return g_last_error.c_str(); }

const char* vs_status_name(vs_status s) {
  switch (s) {
    case VS_OK: return "ok";
    case VS_INVALID_ARGUMENT: return "invalid_argument";
    case VS_NUMERIC_BLOWUP: return "numeric_blowup";
    case VS_OSCILLATOR_COLLAPSE: return "oscillator_collapse";
    case VS_UNDEFINED_ANGLE: return "undefined_angle";
    case VS_SINGULAR_SYSTEM: return "singular_system";
    case VS_INFEASIBLE_OPERATING_POINT: return "infeasible_operating_point";
    case VS_ASSEMBLY: return "assembly";
    case VS_SOLVER: return "solver";
    case VS_CONFIG: return "config";
    case VS_IO: return "io";
    case VS_INTERNAL: return "internal";
  }
  return "unknown";
}

size_t vs_builtin_count(void) { return builtin_names().size(); }

const char* vs_builtin_name(size_t index) {
  const auto& n = builtin_names();
  return index < n.size() ? n[index].c_str() : nullptr;
}

vs_status vs_scenario_builtin(const char* name, vs_scenario** out) {
  return guarded([&] {
    require(name && out, "null argument");
    *out = nullptr;
    *out = new vs_scenario{builtin(name)};
  });
}

vs_status vs_scenario_parse(const char* text, vs_scenario** out) {
  return guarded([&] {
    require(text && out, "null argument");
    *out = nullptr;
    *out = new vs_scenario{parse_scenario(text)};
  });
}

vs_status vs_scenario_load(const char* path, vs_scenario** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = nullptr;
    const std::string text = read_file(path);
    try {
      *out = new vs_scenario{parse_scenario(text)};
    } catch (const Error& e) {
      throw Error(e.code(), std::string(path) + ": " + e.what());
    }
  });
}

vs_status vs_scenario_override(vs_scenario* s, const char* text) {
  return guarded([&] {
    require(s && text, "null argument");
    s->spec = parse_scenario(serialize_scenario(s->spec) + "\n" + text + "\n");
  });
}

vs_status vs_scenario_serialize(const vs_scenario* s, char** out) {
  return guarded([&] {
    require(s && out, "null argument");
    *out = dup_string(serialize_scenario(s->spec));
  });
}

vs_status vs_scenario_save(const vs_scenario* s, const char* path) {
  return guarded([&] {
    require(s && path, "null argument");
    const std::string text = serialize_scenario(s->spec);
    write_atomic(path, [&](std::ostream& os) { os << text; });
  });
}

const char* vs_scenario_name(const vs_scenario* s) { return s ? s->spec.name.c_str() : ""; }

void vs_scenario_free(vs_scenario* s) { delete s; }

void vs_string_free(char* s) { std::free(s); }

vs_status vs_run(const vs_scenario* s, vs_result** out) {
  return guarded([&] {
    require(s && out, "null argument");
    *out = nullptr;
    auto r = std::make_unique<vs_result>();
    r->name = s->spec.name;
    r->description = s->spec.description;
    r->run = run(s->spec.sim, s->spec.schedule, s->spec.model);
    r->metrics = compute_metrics(r->run.log, s->spec.metrics);
    *out = r.release();
  });
}

size_t vs_result_rows(const vs_result* r) { return r ? r->run.log.rows() : 0; }

size_t vs_result_channel_count(const vs_result* r) { return r ? r->run.log.channels() : 0; }

const char* vs_result_channel_name(const vs_result* r, size_t index) {
  if (!r || index >= r->run.log.channels()) return nullptr;
  return r->run.log.names()[index].c_str();
}

vs_status vs_result_channel(const vs_result* r, const char* name, const double** data,
                            size_t* length) {
  return guarded([&] {
    require(r && name && data && length, "null argument");
    const auto& v = std::string(name) == "t" ? r->run.log.time() : r->run.log.channel(name);
    *data = v.data();
    *length = v.size();
  });
}

vs_status vs_result_metrics(const vs_result* r, vs_metrics* out) {
  return guarded([&] {
    require(r && out, "null argument");
    const Metrics& m = r->metrics;
    *out = vs_metrics{m.sag_percent,
                      m.p_pre,
                      m.q_pre,
                      m.p_post,
                      m.q_post,
                      m.p_oscillation_onset,
                      m.p_oscillation,
                      m.saturation_duty,
                      r->run.stats.last_saturated_time,
                      r->run.stats.freeze_violations,
                      m.droop_slope,
                      m.plateau_p.size()};
  });
}

vs_status vs_result_plateau(const vs_result* r, size_t index, double* p, double* f, double* vz) {
  return guarded([&] {
    require(r && p && f && vz, "null argument");
    require(index < r->metrics.plateau_p.size(), "plateau index out of range");
    *p = r->metrics.plateau_p[index];
    *f = r->metrics.plateau_f[index];
    *vz = r->metrics.plateau_vz[index];
  });
}

vs_status vs_result_write_csv(const vs_result* r, const char* path) {
  return guarded([&] {
    require(r && path, "null argument");
    write_atomic(path, [&](std::ostream& os) { r->run.log.write_csv(os); });
  });
}

vs_status vs_result_write_metrics(const vs_result* r, const char* path) {
  return guarded([&] {
    require(r && path, "null argument");
    write_atomic(path, [&](std::ostream& os) { write_metrics_text(os, *r); });
  });
}

void vs_result_free(vs_result* r) { delete r; }

vs_status vs_eig_sweep(const vs_scenario* s, const char* loci_csv, vs_critical_gain* out) {
  return guarded([&] {
    require(s && out, "null argument");
    const auto& a = s->spec.analysis;
    const StudyParams p = study_for(s->spec);
    if (loci_csv) {
      const auto rows = sweep_gain(p, a.eig_k_min, a.eig_k_max, a.eig_steps, a.eig_recompute);
      write_atomic(loci_csv, [&](std::ostream& os) { write_loci_csv(os, rows); });
    }
    const CriticalGain c = critical_gain(p, a.eig_recompute, a.eig_k_min, a.eig_k_max);
    *out = vs_critical_gain{c.found ? 1 : 0, c.k, c.lo, c.hi, c.evaluations};
  });
}

vs_status vs_eigenvalues(const vs_scenario* s, double k, double* re, double* im,
                         size_t capacity, size_t* count) {
  return guarded([&] {
    require(s && count, "null argument");
    require(capacity == 0 || (re && im), "null output buffers");
    const StudyParams p = study_for(s->spec);
    const auto spec = eigenvalues(assemble_model(p, compute_operating_point(p, k), k).a);
    *count = spec.size();
    for (std::size_t i = 0; i < spec.size() && i < capacity; ++i) {
      re[i] = spec[i].real();
      im[i] = spec[i].imag();
    }
  });
}

vs_status vs_droop_curves(const vs_scenario* s, const char* csv_path) {
  return guarded([&] {
    require(s && csv_path, "null argument");
    const auto& m = s->spec.model;
    const auto& a = s->spec.analysis;
    const double z = source_impedance(m.circuit, m.osc.omega_n);
    std::vector<DroopCurve> curves;
    for (double k : a.droop_k)
      curves.push_back(droop_curve(m.osc, k, z, a.droop_v_lo * m.osc.v_zn,
                                   a.droop_v_hi * m.osc.v_zn, a.droop_points));
    write_atomic(csv_path, [&](std::ostream& os) { write_droop_csv(os, curves); });
  });
}

vs_status vs_select_k(const vs_scenario* s, double k_max, const char* table_csv,
                      vs_k_selection* out) {
  return guarded([&] {
    require(s && out, "null argument");
    const auto& m = s->spec.model;
    KSelectionRequest req;
    req.sag_target = s->spec.analysis.select_sag;
    req.retention_floor = s->spec.analysis.select_retention;
    req.i_max = m.gains.i_max;
    if (k_max > 0) {
      req.k_max = k_max;
    } else {
      const auto& a = s->spec.analysis;
      const CriticalGain c = critical_gain(study_for(s->spec), a.eig_recompute, a.eig_k_min, a.eig_k_max);
      if (!c.found)
        throw Error(ErrorCode::solver, "no critical gain in the analysis range; pass k_max");
      req.k_max = c.k;
    }
    const KSelection sel = select_k(m.osc, source_impedance(m.circuit, m.osc.omega_n), req);
    out->feasible = sel.feasible ? 1 : 0;
    out->k = sel.k;
    out->k_max = req.k_max;
    std::snprintf(out->binding, sizeof out->binding, "%s", sel.binding.c_str());
    if (table_csv) {
      write_atomic(table_csv, [&](std::ostream& os) {
        os << "k,current_at_target_a,retention_at_5pct,current_ok,retention_ok\n";
        char buf[160];
        for (const auto& r : sel.table) {
          std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%d,%d\n", r.k, r.current_at_target,
                        r.retention_at_5pct, r.current_ok ? 1 : 0, r.retention_ok ? 1 : 0);
          os << buf;
        }
      });
    }
  });
}

}  // extern "C"
