#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "gmf/cli.hpp"
#include "gmf/errors.hpp"

namespace gmf::cli {

namespace {

Json read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot read config file '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ParameterError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

void write_outputs(const std::string& dir, const CommandOutput& out) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, text] : out.files) {
    std::ofstream f(std::filesystem::path(dir) / name, std::ios::binary);
    if (!f) throw ResourceError("cannot write " + name + " in '" + dir + "'");
    f << text;
  }
  std::ofstream m(std::filesystem::path(dir) / "manifest.json", std::ios::binary);
  if (!m) throw ResourceError("cannot write manifest.json in '" + dir + "'");
  m << out.manifest.dump(2) << '\n';
}

std::size_t threads_from_env() {
  const char* v = std::getenv("GMF_THREADS");
  if (!v) return 1;
  const long n = std::strtol(v, nullptr, 10);
  return n > 0 ? static_cast<std::size_t>(n) : 1;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Log-correlated field Gibbs measures: multifractal exponent estimation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string config_path;
  std::string out_dir = "gmf_out";
  std::uint64_t seed = 0;
  bool deterministic = false;

  auto add_run_flags = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", config_path, "JSON config (or a previous manifest)");
    if (config_required) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_flag("--deterministic", deterministic, "single-threaded, bit-reproducible run");
  };

  double q = 2.0, b2_min = 0.0, b2_max = 4.0, step = 0.05;
  int d = 1;
  bool theory_to_dir = false;
  auto* theory_cmd = app.add_subcommand("theory", "closed-form exponent table");
  theory_cmd->add_option("--q", q, "moment order (> 1)");
  theory_cmd->add_option("--d", d, "dimension");
  theory_cmd->add_option("--beta2-min", b2_min);
  theory_cmd->add_option("--beta2-max", b2_max);
  theory_cmd->add_option("--step", step);
  auto* theory_out = theory_cmd->add_option("--out", out_dir, "write theory.csv here instead of stdout");

  auto* estimate_cmd = app.add_subcommand("estimate", "run one estimator over an eps ladder");
  add_run_flags(estimate_cmd, true);
  auto* sweep_cmd = app.add_subcommand("sweep", "beta2 sweep of fitted exponents (phase diagram)");
  add_run_flags(sweep_cmd, true);

  std::string probe_kind, toolbox_kind;
  auto* probe_cmd = app.add_subcommand("probe", "moment and increment diagnostics");
  probe_cmd->add_option("kind", probe_kind, "negm | lemma1 | lemma2 | prefreeze")
      ->required()
      ->check(CLI::IsMember({"negm", "lemma1", "lemma2", "prefreeze"}));
  add_run_flags(probe_cmd, true);
  auto* toolbox_cmd = app.add_subcommand("toolbox", "randomized comparison-inequality checks");
  toolbox_cmd->add_option("kind", toolbox_kind, "kahane | slepian")
      ->required()
      ->check(CLI::IsMember({"kahane", "slepian"}));
  add_run_flags(toolbox_cmd, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::Validation);
  }

  RunOptions opts;
  opts.deterministic = deterministic;
  opts.threads = deterministic ? 1 : threads_from_env();

  try {
    if (theory_cmd->parsed()) {
      theory::validate({0.0, q, d}, theory::DimensionPolicy::AnyPositive);
      const std::string csv = theory_csv(q, d, beta2_range(b2_min, b2_max, step));
      theory_to_dir = theory_out->count() > 0;
      if (theory_to_dir) {
        CommandOutput out;
        out.files.emplace_back("theory.csv", csv);
        out.manifest = {{"tool", "gmf"}, {"version", kVersion}, {"command", "theory"},
                        {"config", {{"q", q}, {"d", d}, {"beta2_min", b2_min},
                                    {"beta2_max", b2_max}, {"step", step}}}};
        write_outputs(out_dir, out);
      } else {
        std::cout << csv;
      }
      return 0;
    }
    if (seed != 0 || estimate_cmd->get_option("--seed")->count() ||
        sweep_cmd->get_option("--seed")->count() || probe_cmd->get_option("--seed")->count() ||
        toolbox_cmd->get_option("--seed")->count())
      opts.seed = seed;

    CommandOutput out;
    if (estimate_cmd->parsed()) {
      out = cmd_estimate(read_config(config_path), opts);
    } else if (sweep_cmd->parsed()) {
      out = cmd_sweep(read_config(config_path), opts);
    } else if (probe_cmd->parsed()) {
      out = cmd_probe(probe_kind, read_config(config_path), opts);
    } else {
      const Json cfg = config_path.empty() ? Json::object() : read_config(config_path);
      out = cmd_toolbox(toolbox_kind, cfg, opts);
    }
    write_outputs(out_dir, out);
    for (const auto& w : out.manifest["warnings"]) std::cerr << "warning: " << w.get<std::string>() << '\n';
    std::cerr << "wrote " << out_dir << '\n';
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::bad_alloc&) {
    std::cerr << "error: out of memory\n";
    return static_cast<int>(ErrorKind::Resource);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::Resource);
  }
}

}  // namespace gmf::cli
