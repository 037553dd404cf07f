#include <iostream>
#include <map>
#include <memory>

#include "CLI11.hpp"
#include "commands.hpp"
#include "rbfmgn/error.hpp"

namespace {

using rbfmgn::ErrorKind;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Instability: return 3;
    case ErrorKind::Divergence: return 4;
    case ErrorKind::Io:
    case ErrorKind::State:
    case ErrorKind::Shape:
    case ErrorKind::MissingHistory:
    case ErrorKind::DivisionByZero: return 1;
    default: return 2;
  }
}

const char* status_of(int code) {
  switch (code) {
    case 0: return "ok";
    case 2: return "config_error";
    case 3: return "instability";
    case 4: return "divergence";
    default: return "error";
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace rbfmgn::cli;
  CLI::App app{"RBF-FD physics-informed graph network solver"};
  app.require_subcommand(1);

  Options opts;
  std::uint64_t seed = 0;
  using Command = int (*)(RunContext&);
  const std::map<std::string, std::pair<std::string, Command>> commands = {
      {"mesh", {"sample nodes and write the Delaunay graph", cmd_mesh}},
      {"stencils", {"build RBF-FD Laplacian stencils", cmd_stencils}},
      {"solve-direct", {"roll the classical explicit solver to T_final", cmd_solve_direct}},
      {"train", {"train the graph network on the PDE residual", cmd_train}},
      {"eval", {"roll out a checkpoint and write error tables", cmd_eval}},
      {"sweep", {"train and score one config per sweep value", cmd_sweep}},
  };
  for (const auto& [name, entry] : commands) {
    CLI::App* sub = app.add_subcommand(name, entry.first);
    sub->add_option("--config", opts.config_path, "experiment JSON")->required();
    sub->add_option("--out", opts.out_dir, "output directory");
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--jobs", opts.jobs, "parallel sweep points");
    sub->add_flag("--dump-system", opts.dump_system, "write the level-0 residual system");
    sub->add_option("--checkpoint", opts.checkpoint, "checkpoint to evaluate or resume from");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* chosen = app.get_subcommands().front();
  if (chosen->count("--seed") > 0) opts.seed = seed;
  const std::string name = chosen->get_name();

  std::unique_ptr<RunContext> ctx;
  int code = 0;
  try {
    ctx = std::make_unique<RunContext>(name, opts);
    code = commands.at(name).second(*ctx);
  } catch (const rbfmgn::Error& e) {
    code = exit_code(e.kind());
    std::cerr << "rbfmgn " << name << ": error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    code = 1;
    std::cerr << "rbfmgn " << name << ": error: " << e.what() << '\n';
  }
  if (ctx) {
    try {
      ctx->finish(status_of(code));
    } catch (const std::exception& e) {
      std::cerr << "rbfmgn " << name << ": error: cannot write manifest: " << e.what() << '\n';
      if (code == 0) code = 1;
    }
  }
  return code;
}
