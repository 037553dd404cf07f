#include "rbfmgn/error.hpp"

namespace rbfmgn {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "configuration error";
    case ErrorKind::SamplingCapacity: return "sampling-capacity error";
    case ErrorKind::DegenerateGeometry: return "degenerate-geometry error";
    case ErrorKind::DuplicateNode: return "duplicate-node error";
    case ErrorKind::StencilSize: return "stencil-size error";
    case ErrorKind::StencilConditioning: return "stencil-conditioning error";
    case ErrorKind::UnderdeterminedAugmentation: return "under-determined-augmentation error";
    case ErrorKind::Shape: return "shape error";
    case ErrorKind::NoAnalyticSolution: return "no-analytic-solution error";
    case ErrorKind::WrongAssembler: return "wrong-assembler error";
    case ErrorKind::MissingHistory: return "missing-history error";
    case ErrorKind::Instability: return "instability error";
    case ErrorKind::Divergence: return "divergence error";
    case ErrorKind::State: return "state error";
    case ErrorKind::DivisionByZero: return "division-by-zero error";
    case ErrorKind::Io: return "i/o error";
  }
  return "error";
}

void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, std::string(to_string(kind)) + ": " + what);
}

}  // namespace rbfmgn
