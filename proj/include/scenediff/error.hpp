#pragma once

#include <stdexcept>
#include <string>

namespace scenediff {

// Base of every error thrown by the library. Callers that only care about
// "something went wrong in scenediff" can catch this one type.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

#define SCENEDIFF_DEFINE_ERROR(Name)                                           \
  class Name : public Error                                                    \
  {                                                                            \
  public:                                                                      \
    using Error::Error;                                                        \
  }

SCENEDIFF_DEFINE_ERROR(DegenerateInput);
SCENEDIFF_DEFINE_ERROR(EmptyIndex);
SCENEDIFF_DEFINE_ERROR(InvalidDepth);
SCENEDIFF_DEFINE_ERROR(DimensionMismatch);
SCENEDIFF_DEFINE_ERROR(MissingNormals);
SCENEDIFF_DEFINE_ERROR(MissingColors);
SCENEDIFF_DEFINE_ERROR(UnsetPriors);
SCENEDIFF_DEFINE_ERROR(GraphMismatch);
SCENEDIFF_DEFINE_ERROR(EmptyGroundTruth);
SCENEDIFF_DEFINE_ERROR(SpecViolation);
SCENEDIFF_DEFINE_ERROR(InvalidRotation);
SCENEDIFF_DEFINE_ERROR(EmptyScene);
SCENEDIFF_DEFINE_ERROR(IoError);

#undef SCENEDIFF_DEFINE_ERROR

/// Parse failure; carries the 1-based line number when one is known (0 otherwise).
class ParseError : public Error
{
public:
  ParseError(const std::string& what, int line = 0)
    : Error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
      line_(line)
  {}

  int line() const noexcept { return line_; }

private:
  int line_;
};

/// Wraps an error raised inside a pipeline stage with the stage name.
class StageError : public Error
{
public:
  StageError(std::string stage, const std::string& what)
    : Error(stage + ": " + what), stage_(std::move(stage))
  {}

  const std::string& stage() const noexcept { return stage_; }

private:
  std::string stage_;
};

} // namespace scenediff
