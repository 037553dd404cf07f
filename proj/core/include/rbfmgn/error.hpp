#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rbfmgn {

enum class ErrorKind {
  Config,
  SamplingCapacity,
  DegenerateGeometry,
  DuplicateNode,
  StencilSize,
  StencilConditioning,
  UnderdeterminedAugmentation,
  Shape,
  NoAnalyticSolution,
  WrongAssembler,
  MissingHistory,
  Instability,
  Divergence,
  State,
  DivisionByZero,
  Io,
};

std::string_view to_string(ErrorKind kind);

// Every failure the library reports is an Error tagged with its kind, so
// callers (the CLI in particular) can map failures onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace rbfmgn
