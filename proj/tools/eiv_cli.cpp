#include <CLI11.hpp>

#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "eiv/analyzers.hpp"
#include "eiv/config.hpp"
#include "eiv/errors.hpp"
#include "eiv/montecarlo.hpp"
#include "eiv/report.hpp"

namespace {

struct Options {
  std::string config_path;
  std::string out_path;
  std::string format = "csv";
  int threads = 1;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void add_common_flags(CLI::App* sub, Options& opts) {
  sub->add_option("--config", opts.config_path, "JSON configuration file")
      ->required();
  sub->add_option("--seed", opts.seed, "Master seed (overrides config)")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--threads", opts.threads,
                  "Worker threads (0 = hardware default)");
  sub->add_option("--out", opts.out_path, "Output path (default stdout)");
  sub->add_option("--format", opts.format, "csv or markdown")
      ->check(CLI::IsMember({"csv", "markdown", "md"}));
}

// Precedence: --seed, then the config's seed field, then EIV_SEED.
void resolve_seed(eiv::ParsedConfig& parsed, const Options& opts) {
  if (opts.seed_given) {
    eiv::override_seed(parsed, opts.seed);
    return;
  }
  if (parsed.seed_present) return;
  const char* env = std::getenv("EIV_SEED");
  if (!env || *env == '\0') return;
  errno = 0;
  char* end = nullptr;
  const unsigned long long value = std::strtoull(env, &end, 10);
  if (errno != 0 || end == env || *end != '\0')
    throw eiv::ConfigError("EIV_SEED must be a nonnegative integer");
  eiv::override_seed(parsed, static_cast<std::uint64_t>(value));
}

void write_artifact(const Options& opts,
                    const std::function<void(std::ostream&)>& emit) {
  if (opts.out_path.empty()) {
    emit(std::cout);
    return;
  }
  std::ofstream out(opts.out_path);
  if (!out) throw eiv::ConfigError("cannot open output path " + opts.out_path);
  emit(out);
  if (!out) throw eiv::ConfigError("failed writing " + opts.out_path);
}

void report_cell_errors(const std::vector<eiv::GridCellError>& errors) {
  for (const eiv::GridCellError& e : errors)
    std::cerr << "eiv: cell " << e.index << " failed: " << e.message << "\n";
}

int dispatch(const std::string& verb, const Options& opts) {
  eiv::ParsedConfig parsed = eiv::parse_config(opts.config_path);
  resolve_seed(parsed, opts);
  const eiv::OutputFormat format = eiv::parse_format(opts.format);

  if (verb == "run-cell" || verb == "run-grid") {
    if (parsed.kind != eiv::ConfigKind::harness)
      throw eiv::ConfigError("config is not a simulation grid");
    if (verb == "run-cell" && parsed.cells.size() != 1)
      throw eiv::ConfigError("run-cell requires a config with exactly one "
                             "cell; got " +
                             std::to_string(parsed.cells.size()));
    std::vector<eiv::GridCellError> errors;
    const std::vector<eiv::CellResult> results =
        eiv::run_grid(parsed.cells, opts.threads, &errors);
    report_cell_errors(errors);
    if (results.empty()) {
      std::cerr << "eiv: every cell failed\n";
      return 3;
    }
    write_artifact(opts, [&](std::ostream& out) {
      eiv::emit_table(results, out, format);
    });
    return 0;
  }

  if (verb == "rate-sweep") {
    if (parsed.kind != eiv::ConfigKind::sweep)
      throw eiv::ConfigError("config has no \"sweep\" section");
    std::vector<eiv::GridCellError> errors;
    const std::vector<eiv::CellResult> results =
        eiv::rate_sweep(parsed.sweep.ps, parsed.sweep.rule, parsed.sweep.base,
                        opts.threads, &errors);
    report_cell_errors(errors);
    if (results.empty()) {
      std::cerr << "eiv: every cell failed\n";
      return 3;
    }
    write_artifact(opts, [&](std::ostream& out) {
      eiv::emit_sweep(results, out, format);
    });
    return 0;
  }

  if (verb == "amse") {
    if (parsed.kind != eiv::ConfigKind::amse)
      throw eiv::ConfigError("config is not an amse analysis");
    const eiv::AmseReport report = eiv::run_amse(parsed.amse);
    write_artifact(opts, [&](std::ostream& out) {
      eiv::emit_amse(report, out, format);
    });
    return 0;
  }

  if (verb == "certify") {
    if (parsed.kind != eiv::ConfigKind::certify)
      throw eiv::ConfigError("config is not a certify analysis");
    const eiv::CertifyReport report = eiv::run_certify(parsed.certify);
    write_artifact(opts, [&](std::ostream& out) {
      eiv::emit_certify(report, out, format);
    });
    return report.violations == 0 ? 0 : 3;
  }

  throw eiv::ConfigError("unknown subcommand " + verb);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Weighted total-least-squares estimation: simulation harness, AMSE "
      "analysis, and perturbation certificates"};
  app.require_subcommand(1);

  Options opts;
  std::vector<std::pair<std::string, CLI::App*>> subs;
  for (const char* verb :
       {"run-cell", "run-grid", "rate-sweep", "amse", "certify"}) {
    CLI::App* sub = app.add_subcommand(verb);
    add_common_flags(sub, opts);
    subs.emplace_back(verb, sub);
  }
  subs[0].second->description("Run a single simulation cell");
  subs[1].second->description("Run a grid of simulation cells");
  subs[2].second->description("Run a dimension sweep with rule-driven n");
  subs[3].second->description("Closed-form AMSE for diagonal designs");
  subs[4].second->description("Randomized perturbation-certificate suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  std::string verb;
  for (const auto& [name, sub] : subs)
    if (sub->parsed()) {
      verb = name;
      opts.seed_given = sub->count("--seed") > 0;
    }

  try {
    return dispatch(verb, opts);
  } catch (const eiv::ConfigError& e) {
    std::cerr << "eiv: " << e.what() << "\n";
    return 2;
  } catch (const eiv::Error& e) {
    std::cerr << "eiv: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "eiv: " << e.what() << "\n";
    return 3;
  }
}
