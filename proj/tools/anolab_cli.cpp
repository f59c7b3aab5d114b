// Command-line front end: analyze, sweep-T, list-models.

#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "anolab/pipeline.hpp"

namespace {

constexpr int kExitIncomplete = 1;
constexpr int kExitConfig = 2;
constexpr int kExitModel = 3;

struct Overrides {
  std::optional<int> resolution;
  std::optional<double> tol;
  std::optional<unsigned> seed;

  void apply(anolab::RunConfig& c) const {
    if (resolution) c.resolution = *resolution;
    if (tol) c.tol = *tol;
    if (seed) c.seed = *seed;
  }
};

anolab::RunConfig load_config(const std::string& path, const Overrides& o) {
  const std::filesystem::path p(path);
  anolab::RunConfig c = anolab::parse_config(anolab::read_json_file(p), p.parent_path());
  o.apply(c);
  if (c.resolution && *c.resolution < 1) throw anolab::ConfigError("resolution must be positive");
  if (c.tol && !(*c.tol > 0.0)) throw anolab::ConfigError("tolerance must be positive");
  return c;
}

std::vector<double> parse_horizons(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw anolab::ConfigError("bad horizon '" + item + "' in --T");
    }
    if (!(out.back() >= 0.0)) throw anolab::ConfigError("horizons must be non-negative");
  }
  if (out.empty()) throw anolab::ConfigError("--T needs at least one horizon");
  return out;
}

int run_analyze(const std::string& config_path, const std::string& out_dir, const Overrides& o) {
  anolab::RunConfig c = load_config(config_path, o);
  if (!out_dir.empty()) c.out_dir = out_dir;
  const anolab::RunReport r = anolab::run_analysis(c);
  for (const auto& [name, result] : r.report["analyses"].items())
    std::cout << name << ": " << result["status"].get<std::string>() << '\n';
  std::cout << "report: " << (c.out_dir / "report.json").string() << '\n';
  return r.all_completed ? 0 : kExitIncomplete;
}

int run_sweep(const std::string& config_path, const std::string& horizons, const std::string& out_dir, bool force,
              const Overrides& o) {
  anolab::RunConfig c = load_config(config_path, o);
  c.sweep_t = parse_horizons(horizons);
  c.force = c.force || force;
  const anolab::ZooModel z = anolab::build_model(c);
  const anolab::Splitting sp = z.e_s && z.e_u ? anolab::declared_splitting(z.x, *z.e_s, *z.e_u, z.model)
                                              : anolab::compute_splitting(z.x, z.model);
  const anolab::Rates rates = anolab::expansion_rates(sp, anolab::RateMethod::bracket);
  const double tol = c.tol.value_or(z.model->default_tolerance());
  const anolab::Verdict v = anolab::classify_flow(rates, tol);
  if (!c.force && v.classification != anolab::Classification::anosov) {
    std::cerr << "sweep-T: model classified " << anolab::to_string(v.classification)
              << "; pass --force to sweep anyway\n";
    return kExitIncomplete;
  }
  const anolab::SweepResult r = anolab::sweep_horizons(sp, rates, c.sweep_t, c.sweep_tilt, tol);
  std::ostringstream csv;
  anolab::write_sweep_csv(csv, r.rows);
  anolab::write_sweep_summary(csv, r.summary);
  std::cout << csv.str();
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream(std::filesystem::path(out_dir) / "sweep.csv", std::ios::binary) << csv.str();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anosov flows, bi-contact structures and Liouville pairs on 3-manifolds"};
  app.require_subcommand(1);
  Overrides o;
  const auto add_overrides = [&o](CLI::App* cmd) {
    cmd->add_option("--resolution", o.resolution, "grid resolution per axis (overrides the config)");
    cmd->add_option("--tol", o.tol, "verdict tolerance (overrides the config)");
    cmd->add_option("--seed", o.seed, "perturbation seed (overrides the config)");
  };

  std::string config, out, horizons;
  bool force = false;
  CLI::App* analyze = app.add_subcommand("analyze", "run the analyses listed in a config");
  analyze->add_option("--config", config, "RunConfig JSON")->required();
  analyze->add_option("--out", out, "output directory (overrides the config)");
  add_overrides(analyze);

  CLI::App* sweep = app.add_subcommand("sweep-T", "approximation diagnostics against the horizon T");
  sweep->add_option("--config", config, "RunConfig JSON")->required();
  sweep->add_option("--T", horizons, "comma-separated horizons, e.g. 1,2,4,8")->required();
  sweep->add_option("--out", out, "also write sweep.csv into this directory");
  sweep->add_flag("--force", force, "sweep models that are not classified Anosov");
  add_overrides(sweep);

  CLI::App* list = app.add_subcommand("list-models", "list the built-in models");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*list) {
      for (const anolab::ModelInfo& m : anolab::list_models())
        std::cout << m.name << "\t" << m.description << "\t(" << m.parameters << ")\n";
      return 0;
    }
    if (*analyze) return run_analyze(config, out, o);
    return run_sweep(config, horizons, out, force, o);
  } catch (const anolab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const anolab::ModelError& e) {
    std::cerr << "model error: " << e.what() << '\n';
    return kExitModel;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIncomplete;
  }
}
