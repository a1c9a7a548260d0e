// Command-line front end. Everything below talks to the engine through the
// C interface in graphcf.h only.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "graphcf.h"

namespace {

void write_stdout(const char* text, size_t length, void*) {
  std::fwrite(text, 1, length, stdout);
  std::fflush(stdout);
}

int fail(graphcf_experiment* exp, const char* where, graphcf_status status) {
  std::fprintf(stderr, "graphcf %s: %s (%s)\n", where,
               graphcf_experiment_last_error(exp),
               graphcf_status_name(status));
  graphcf_experiment_free(exp);
  return static_cast<int>(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rating prediction with graph-based implicit feedback"};
  app.set_version_flag("--version", graphcf_version());
  app.footer("Commands run in the order given and share one config.\n"
             "Run `graphcf --keys` to list every config key and its default.");

  std::string config_path;
  std::vector<std::string> sets;
  bool show_keys = false;
  app.add_option("--config", config_path,
                 "experiment config file (key = value lines, # comments)");
  app.add_option("--set", sets, "override one config key (repeatable)")
      ->type_name("KEY=VALUE");
  app.add_flag("--keys", show_keys, "list every config key and exit");

  struct Command {
    const char* name;
    const char* help;
  };
  const Command commands[] = {
      {"prepare", "parse the ratings file and write the train/test split"},
      {"sample", "draw per-entity feedback sets from the interaction graph"},
      {"train", "fit the configured model; writes snapshot and curve"},
      {"evaluate", "score the test split overall and by degree slice"},
      {"analyze", "attention reports, curve comparison, adjacency dumps"},
      {"gradcheck", "compare analytic gradients with finite differences"},
  };
  for (const Command& c : commands)
    app.add_subcommand(c.name, c.help)->fallthrough();

  CLI11_PARSE(app, argc, argv);

  if (show_keys) {
    std::fputs(graphcf_config_help(), stdout);
    return 0;
  }
  const std::vector<CLI::App*> chosen = app.get_subcommands();
  if (chosen.empty()) {
    std::fputs(app.help().c_str(), stdout);
    return 0;
  }

  graphcf_experiment* exp = graphcf_experiment_new();
  if (!exp) {
    std::fputs("graphcf: out of memory\n", stderr);
    return 1;
  }
  graphcf_experiment_set_writer(exp, write_stdout, nullptr);

  if (!config_path.empty()) {
    const graphcf_status st =
        graphcf_experiment_load_file(exp, config_path.c_str());
    if (st != GRAPHCF_OK) return fail(exp, "--config", st);
  }
  for (const std::string& kv : sets) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "graphcf --set: expected KEY=VALUE, got '%s'\n",
                   kv.c_str());
      graphcf_experiment_free(exp);
      return static_cast<int>(GRAPHCF_INVALID_ARGUMENT);
    }
    const std::string key = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    const graphcf_status st =
        graphcf_experiment_set(exp, key.c_str(), value.c_str());
    if (st != GRAPHCF_OK) return fail(exp, "--set", st);
  }

  for (const CLI::App* sub : chosen) {
    const std::string name = sub->get_name();
    if (chosen.size() > 1) std::printf("-- %s --\n", name.c_str());
    const graphcf_status st = graphcf_experiment_run(exp, name.c_str());
    if (st != GRAPHCF_OK) return fail(exp, name.c_str(), st);
  }
  graphcf_experiment_free(exp);
  return 0;
}
