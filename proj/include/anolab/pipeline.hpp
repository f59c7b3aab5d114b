#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "anolab/io.hpp"

namespace anolab {

inline constexpr int kReportSchemaVersion = 1;

/// Analyses in dependency order.
inline const std::vector<std::string>& analysis_names() {
  static const std::vector<std::string> names{"splitting", "rates", "bicontact", "liouville", "reeb",
                                              "torsion", "negative-region", "sweep-T", "weak-filling"};
  return names;
}

struct RunConfig {
  json model;  ///< "name" or {"name": ..., params} or {"path": ...}
  std::optional<int> resolution;
  std::optional<double> horizon;  ///< empty = automatic doubling search
  std::optional<double> tol;      ///< empty = model default
  unsigned seed = 0;
  std::filesystem::path out_dir = ".";
  std::vector<std::string> analyses;
  std::vector<double> sweep_t{1, 2, 4, 8};
  double sweep_tilt = 0.2;  ///< initial duals alpha_u + tilt alpha_s, alpha_s + tilt alpha_u
  bool force = false;       ///< run sweep-T on models not classified Anosov
  double filling_eps = 0.05, filling_eps_prime = 0.08;
  std::filesystem::path base_dir = ".";  ///< relative model paths are resolved against this
};

[[nodiscard]] inline RunConfig parse_config(const json& j, const std::filesystem::path& base_dir = ".") {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> keys{"model", "resolution", "horizon", "tolerance", "seed", "out",
                                          "analyses", "sweep", "weak_filling"};
  for (const auto& [k, v] : j.items())
    if (!keys.count(k)) throw ConfigError("unknown config field '" + k + "'");
  RunConfig c;
  c.base_dir = base_dir;
  if (!j.contains("model")) throw ConfigError("config needs a 'model'");
  c.model = j.at("model");
  try {
    if (j.contains("resolution")) c.resolution = j.at("resolution").get<int>();
    if (j.contains("horizon")) {
      const json& h = j.at("horizon");
      if (h.is_string()) {
        if (h != "auto") throw ConfigError("horizon must be a number or \"auto\"");
      } else {
        c.horizon = h.get<double>();
        if (!(*c.horizon >= 0.0)) throw ConfigError("horizon must be non-negative");
      }
    }
    if (j.contains("tolerance")) c.tol = j.at("tolerance").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<unsigned>();
    if (j.contains("out")) c.out_dir = j.at("out").get<std::string>();
    if (j.contains("analyses")) c.analyses = j.at("analyses").get<std::vector<std::string>>();
    if (j.contains("sweep")) {
      const json& s = j.at("sweep");
      c.sweep_t = s.value("T", c.sweep_t);
      c.sweep_tilt = s.value("tilt", c.sweep_tilt);
      c.force = s.value("force", c.force);
    }
    if (j.contains("weak_filling")) {
      c.filling_eps = j.at("weak_filling").value("eps", c.filling_eps);
      c.filling_eps_prime = j.at("weak_filling").value("eps_prime", c.filling_eps_prime);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  for (const std::string& a : c.analyses)
    if (std::find(analysis_names().begin(), analysis_names().end(), a) == analysis_names().end())
      throw ConfigError("unknown analysis '" + a + "'");
  if (c.resolution && *c.resolution < 1) throw ConfigError("resolution must be positive");
  if (c.tol && !(*c.tol > 0.0)) throw ConfigError("tolerance must be positive");
  for (double t : c.sweep_t)
    if (!(t >= 0.0)) throw ConfigError("sweep horizons must be non-negative");
  return c;
}

// ---------------------------------------------------------------------------------------------
// Model registry

struct ModelInfo {
  std::string name, description, parameters;
};

[[nodiscard]] inline std::vector<ModelInfo> list_models() {
  return {
      {"geodesic", "geodesic flow of a hyperbolic surface, frame-local (homogeneous) model", "none"},
      {"cat", "suspension of a hyperbolic toral automorphism", "matrix [[2,1],[1,1]], resolution 16"},
      {"t3", "projectively Anosov flow of the T^3 bi-contact family", "n 1, m 1, eps 0.1, eps_prime 0.2, resolution 8 (z axis 4x)"},
      {"perturbed", "smooth seeded C^1-small perturbation of a grid model", "base {cat}, amplitude 0.02, seed from config"},
      {"file", "FrameModel JSON document", "path"},
  };
}

namespace detail {

inline ZooModel build_named(const json& spec, const RunConfig& c) {
  const json params = spec.is_string() ? json::object({{"name", spec}}) : spec;
  if (!params.is_object()) throw ConfigError("model must be a name or an object");
  if (params.contains("path")) {
    std::filesystem::path p = params.at("path").get<std::string>();
    if (p.is_relative()) p = c.base_dir / p;
    json doc = read_json_file(p);
    if (c.resolution && doc.value("kind", std::string("coordinate-grid")) == "coordinate-grid")
      doc["resolution"] = *c.resolution;
    return model_from_json(doc);
  }
  const std::string name = require(params, "name").get<std::string>();
  try {
    if (name == "geodesic") return geodesic_frame_model();
    if (name == "cat") {
      Eigen::Matrix2d a;
      a << 2, 1, 1, 1;
      if (params.contains("matrix")) {
        const auto m = params.at("matrix").get<std::vector<std::vector<double>>>();
        if (m.size() != 2 || m[0].size() != 2 || m[1].size() != 2) throw ConfigError("matrix must be 2x2");
        a << m[0][0], m[0][1], m[1][0], m[1][1];
      }
      return cat_suspension(a, c.resolution.value_or(params.value("resolution", 16)));
    }
    if (name == "t3") {
      const int r = c.resolution.value_or(params.value("resolution", 8));
      return t3_model(params.value("n", 1), params.value("m", 1), params.value("eps", 0.1),
                      params.value("eps_prime", 0.2), {r, r, 4 * r});
    }
    if (name == "perturbed") {
      const ZooModel base = build_named(params.value("base", json("cat")), c);
      return perturb(base, params.value("amplitude", 0.02), params.value("seed", c.seed));
    }
  } catch (const json::exception& e) {
    throw ConfigError("bad model parameter: " + std::string(e.what()));
  }
  throw ConfigError("unknown model '" + name + "'");
}

}  // namespace detail

/// Builds the configured model. ConfigError for bad specs, ModelError for invalid models.
[[nodiscard]] inline ZooModel build_model(const RunConfig& c) { return detail::build_named(c.model, c); }

// ---------------------------------------------------------------------------------------------
// Sweep of the approximating forms

struct SweepResult {
  std::vector<SweepRow> rows;
  json summary;
};

/// Approximating forms at each horizon, from the exact duals tilted by `tilt`.
/// `l3_negative` demands both l3 maxima below `-tol` at every horizon, so a flow whose rates only touch zero
/// (l3 creeping up to 0) is flagged rather than passed on round-off.
[[nodiscard]] inline SweepResult sweep_horizons(const Splitting& sp, const Rates& rates, const std::vector<double>& ts,
                                                double tilt, double tol = 0.0) {
  const auto [as, au] = exact_duals(sp);
  const OneForm au0 = linear_combination(1.0, au, tilt, as);
  const OneForm as0 = linear_combination(1.0, as, tilt, au);
  SweepResult out;
  for (double t : ts) {
    const auto [b, ap] = synthesize_from(sp, rates, t, au0, as0);
    out.rows.push_back({t, ap.diagnostics, b.margin_plus, b.margin_minus});
  }
  bool l1_dec = true, l2u_dec = true, l2s_dec = true, l3_neg = true;
  double l3_max = -INFINITY;
  for (std::size_t k = 0; k < out.rows.size(); ++k) {
    const ApproxDiagnostics& d = out.rows[k].d;
    if (k > 0) {
      const ApproxDiagnostics& p = out.rows[k - 1].d;
      l1_dec = l1_dec && d.angle_l1 < p.angle_l1;
      l2u_dec = l2u_dec && d.max_abs_l2_u <= p.max_abs_l2_u;
      l2s_dec = l2s_dec && d.max_abs_l2_s <= p.max_abs_l2_s;
    }
    l3_max = std::max({l3_max, d.max_l3_us, d.max_l3_su});
    l3_neg = l3_neg && d.max_l3_us < -tol && d.max_l3_su < -tol;
  }
  out.summary = {{"angle_l1_strictly_decreasing", l1_dec},
                 {"max_abs_l2_u_decreasing", l2u_dec},
                 {"max_abs_l2_s_decreasing", l2s_dec},
                 {"l3_negative", l3_neg},
                 {"l3_max", number(l3_max)},
                 {"tilt", tilt},
                 {"tolerance", tol}};
  return out;
}

inline void write_sweep_summary(std::ostream& os, const json& summary) {
  for (const auto& [k, v] : summary.items()) os << "# " << k << ": " << v.dump() << '\n';
}

// ---------------------------------------------------------------------------------------------
// Pipeline

struct RunReport {
  json report;   ///< deterministic for a given config
  json timings;  ///< seconds per analysis; kept apart from the report
  std::vector<std::string> files;
  bool all_completed = true;
};

namespace detail {

struct PipelineState {
  ZooModel zoo;
  double tol = 0.0;
  std::optional<Splitting> sp;
  std::optional<Rates> rates;
  std::optional<Verdict> verdict;
  std::optional<BiContact> bicontact;
  std::map<std::string, std::string> failed;  ///< prerequisite name -> error
};

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + p.string() + "'");
  out << s;
}

}  // namespace detail

/// Runs the requested analyses in dependency order and writes the report and tables into
/// `config.out_dir`. Prerequisites are computed implicitly; only requested analyses are
/// reported. Per-analysis failures are recorded without aborting independent analyses.
[[nodiscard]] inline RunReport run_analysis(const RunConfig& config) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  if (ec || !fs::is_directory(config.out_dir))
    throw ConfigError("output directory '" + config.out_dir.string() + "' is not writable");

  detail::PipelineState st;
  st.zoo = build_model(config);
  st.tol = config.tol.value_or(st.zoo.model->default_tolerance());
  RunReport out;
  out.report = {{"schema_version", kReportSchemaVersion},
                {"model", model_summary(st.zoo)},
                {"config",
                 {{"model", config.model},
                  {"resolution", config.resolution ? json(*config.resolution) : json(nullptr)},
                  {"horizon", config.horizon ? json(*config.horizon) : json("auto")},
                  {"tolerance", st.tol},
                  {"seed", config.seed},
                  {"analyses", config.analyses}}},
                {"analyses", json::object()}};
  out.timings = json::object();

  const std::set<std::string> requested(config.analyses.begin(), config.analyses.end());
  const auto needs = [&](std::initializer_list<const char*> names) {
    for (const char* n : names)
      if (requested.count(n)) return true;
    return false;
  };

  // Each step either fills state or records why it failed.
  using Clock = std::chrono::steady_clock;
  const auto step = [&](const std::string& name, const std::vector<std::string>& deps,
                        const std::function<json()>& body) {
    for (const std::string& d : deps)
      if (st.failed.count(d)) {
        st.failed[name] = "prerequisite '" + d + "' failed";
        break;
      }
    json result;
    const auto t0 = Clock::now();
    if (!st.failed.count(name)) {
      try {
        result = body();
        result["status"] = "completed";
      } catch (const std::exception& e) {
        st.failed[name] = e.what();
      }
    }
    if (st.failed.count(name)) result = {{"status", "failed"}, {"error", st.failed[name]}};
    if (requested.count(name)) {
      out.report["analyses"][name] = result;
      out.timings[name] = std::chrono::duration<double>(Clock::now() - t0).count();
      if (result["status"] != "completed") out.all_completed = false;
    }
  };
  const auto emit = [&](const std::string& file, const std::string& text) {
    detail::write_text(config.out_dir / file, text);
    out.files.push_back(file);
  };

  const bool want_split = needs({"splitting", "rates", "bicontact", "liouville", "reeb", "negative-region", "sweep-T"});
  const bool want_rates = needs({"rates", "bicontact", "liouville", "reeb", "sweep-T", "splitting"});
  const bool want_bicontact = needs({"bicontact", "liouville", "negative-region", "torsion"});

  if (want_split)
    step("splitting", {}, [&] {
      if (st.zoo.e_s && st.zoo.e_u) {
        st.sp = declared_splitting(st.zoo.x, *st.zoo.e_s, *st.zoo.e_u, st.zoo.model);
      } else {
        st.sp = compute_splitting(st.zoo.x, st.zoo.model);
      }
      json j = to_json(*st.sp);
      j["provenance"] = st.zoo.e_s ? "model ground truth" : "computed";
      return j;
    });
  if (want_rates)
    step("rates", {"splitting"}, [&] {
      st.rates = expansion_rates(*st.sp, RateMethod::bracket);
      st.verdict = classify_flow(*st.rates, st.tol);
      std::ostringstream csv;
      write_splitting_csv(csv, *st.sp, *st.rates);
      emit("splitting.csv", csv.str());
      json j = to_json(*st.rates);
      j["verdict"] = to_json(*st.verdict);
      j["grid_csv"] = "splitting.csv";
      return j;
    });
  if (requested.count("splitting") && st.rates) out.report["analyses"]["splitting"]["grid_csv"] = "splitting.csv";

  if (want_bicontact)
    step("bicontact", {}, [&] {
      json j;
      if (st.zoo.alpha_plus && st.zoo.alpha_minus) {
        st.bicontact = bicontact_from_forms(*st.zoo.alpha_minus, *st.zoo.alpha_plus, st.zoo.x, st.zoo.model);
      } else {
        if (st.failed.count("rates")) throw ContactError("prerequisite 'rates' failed");
        auto [b, ap] = synthesize_bicontact(*st.sp, *st.rates, config.horizon.value_or(-1.0));
        st.bicontact = b;
        j["approximation"] = to_json(ap);
      }
      j.update(to_json(*st.bicontact));
      return j;
    });

  if (requested.count("liouville"))
    step("liouville", {"bicontact"}, [&] {
      const auto [s, w] = liouville_verdict(st.bicontact->alpha_minus, st.bicontact->alpha_plus, *st.zoo.model, st.tol);
      json j;
      for (LiouvilleReport r : {s, w}) {
        r.profile_csv_path = std::string("liouville_") + (r.pair == LiouvillePair::standard ? "standard" : "twisted") + ".csv";
        std::ostringstream csv;
        write_profile_csv(csv, r);
        emit(r.profile_csv_path, csv.str());
        j[r.pair == LiouvillePair::standard ? "standard" : "twisted"] = to_json(r);
      }
      if (s.positive && w.positive && st.sp) {
        try {
          j["rate_witness"] = to_json(converse_rate_witness(st.bicontact->alpha_minus, st.bicontact->alpha_plus, *st.sp));
        } catch (const ContactError& e) {
          j["rate_witness"] = {{"error", e.what()}};
        }
      } else {
        j["rate_witness"] = {{"error", "needs both pairs positive and a splitting"}};
      }
      return j;
    });

  if (requested.count("reeb"))
    step("reeb", {"rates"}, [&] { return to_json(reeb_anosov_test(*st.sp, *st.rates)); });

  if (requested.count("torsion"))
    step("torsion", {"bicontact"}, [&] {
      const FrameModel& m = *st.zoo.model;
      if (!m.is_grid()) throw ModelError("torsion needs a grid model with a closed third-axis loop");
      const Vec3 lo = m.domain().lower, ex = m.domain().extent;
      const auto curve = [lo, ex](double s) { return Vec3(lo[0], lo[1], lo[2] + s * ex[2]); };
      const VecField u = VecField::constant(Vec3(1, 0, 0)), v = VecField::constant(Vec3(0, 1, 0));
      return json{{"curve", "third-axis loop through the domain corner"},
                  {"plane", "span(f_1, f_2)"},
                  {"alpha_plus", to_json(plane_winding(st.bicontact->alpha_plus, curve, u, v))},
                  {"alpha_minus", to_json(plane_winding(st.bicontact->alpha_minus, curve, u, v))}};
    });

  if (requested.count("negative-region"))
    step("negative-region", {"splitting", "bicontact"}, [&] {
      return json{{"alpha_plus", to_json(negative_region(st.bicontact->alpha_plus, *st.sp))},
                  {"alpha_minus", to_json(negative_region(st.bicontact->alpha_minus, *st.sp))}};
    });

  if (requested.count("sweep-T"))
    step("sweep-T", {"rates"}, [&] {
      if (!config.force && st.verdict->classification != Classification::anosov)
        throw ContactError(std::string("sweep needs an Anosov-classified model (classified ") +
                           to_string(st.verdict->classification) + "); set sweep.force to run anyway");
      const SweepResult r = sweep_horizons(*st.sp, *st.rates, config.sweep_t, config.sweep_tilt, st.tol);
      std::ostringstream csv;
      write_sweep_csv(csv, r.rows);
      write_sweep_summary(csv, r.summary);
      emit("sweep.csv", csv.str());
      json j = r.summary;
      j["csv"] = "sweep.csv";
      return j;
    });

  if (requested.count("weak-filling"))
    step("weak-filling", {}, [&] {
      const json p = config.model.is_object() ? config.model : json::object();
      return to_json(weak_filling_T3(p.value("n", 1), p.value("m", 1), config.filling_eps, config.filling_eps_prime,
                                     *st.zoo.model));
    });

  out.report["files"] = out.files;
  emit("report.json", out.report.dump(2) + "\n");
  emit("timings.json", out.timings.dump(2) + "\n");
  return out;
}

}  // namespace anolab
