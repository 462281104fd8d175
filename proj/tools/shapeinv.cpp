// shapeinv: command-line driver for the experiments.
//
//   shapeinv <verb> [--config PATH] [--seed U64] [--out DIR] [--workers N]
//
// Exit codes: 0 success, 2 config error, 3 numeric failure, 4 budget or
// check failure. Errors are reported as one JSON object on stderr.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "shapeinv/experiments.hpp"

namespace ex = shapeinv::experiments;
using shapeinv::io::json;

namespace {

int fail(int code, const std::string& kind, const std::string& verb, const std::string& msg) {
  json e{{"error", kind}, {"command", verb}, {"message", msg}, {"exit_code", code}};
  std::cerr << e.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random-shift curve model experiments"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides the config)");
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (default: $SHAPEINV_OUT_DIR or out/<verb>)");
  app.add_option("--workers", workers, "worker threads; results do not depend on it")->check(CLI::Range(1u, 1024u));
  for (auto& v : ex::verbs()) app.add_subcommand(v, "run the " + v + " experiment")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail(2, "usage", "", e.what());
  }
  std::string verb = app.get_subcommands().front()->get_name();

  json cfg;
  try {
    json user = json::object();
    if (!config_path.empty()) {
      try {
        user = json::parse(shapeinv::io::read_text(config_path));
      } catch (const json::exception& e) {
        throw shapeinv::ConfigError(std::string("config is not valid JSON: ") + e.what());
      }
      if (!user.is_object() || !user.contains("schema_version"))
        throw shapeinv::ConfigError("config file must be an object with a schema_version field");
    }
    if (*seed_opt) user["seed"] = seed;
    cfg = ex::resolve_config(verb, user);
  } catch (const std::exception& e) {
    return fail(2, "config", verb, e.what());
  }

  std::filesystem::path out;
  if (!out_dir.empty())
    out = out_dir;
  else if (const char* env = std::getenv("SHAPEINV_OUT_DIR"); env && *env)
    out = std::filesystem::path(env) / verb;
  else
    out = std::filesystem::path("out") / verb;

  shapeinv::default_workers() = workers;
  try {
    auto r = ex::run_command(verb, cfg, out);
    std::cout << r.summary.dump(2) << "\n";
    if (r.exit_code == 4) return fail(4, "check", verb, "one or more checks failed; see " + (out / "summary.json").string());
    return r.exit_code;
  } catch (const shapeinv::ConfigError& e) {
    return fail(2, "config", verb, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(2, "config", verb, e.what());
  } catch (const shapeinv::BudgetError& e) {
    return fail(4, "budget", verb, e.what());
  } catch (const shapeinv::NumericError& e) {
    return fail(3, "numeric", verb, e.what());
  } catch (const std::exception& e) {
    return fail(3, "numeric", verb, e.what());
  }
}
