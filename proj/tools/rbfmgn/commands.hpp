#pragma once

#include "run_context.hpp"

namespace rbfmgn::cli {

int cmd_mesh(RunContext& ctx);
int cmd_stencils(RunContext& ctx);
int cmd_solve_direct(RunContext& ctx);
int cmd_train(RunContext& ctx);
int cmd_eval(RunContext& ctx);
int cmd_sweep(RunContext& ctx);

}  // namespace rbfmgn::cli
