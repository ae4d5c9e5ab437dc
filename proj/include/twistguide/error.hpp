#pragma once

#include <stdexcept>
#include <string>

namespace twg {

/// Base class for every failure raised by the library. `kind()` is the
/// stable, machine-readable error name used in reports and exit codes.
class Error : public std::runtime_error
{
public:
  Error(std::string kind, const std::string& what)
    : std::runtime_error(kind + ": " + what), kind_(std::move(kind))
  {}
  const std::string& kind() const noexcept { return kind_; }

private:
  std::string kind_;
};

#define TWG_DEFINE_ERROR(Name)                                                 \
  class Name : public Error                                                    \
  {                                                                            \
  public:                                                                      \
    explicit Name(const std::string& what) : Error(#Name, what) {}             \
  }

// geometry
TWG_DEFINE_ERROR(EmptyGrid);
TWG_DEFINE_ERROR(DegenerateShape);
// fiber
TWG_DEFINE_ERROR(TruncationTooSmall);
TWG_DEFINE_ERROR(NoConvergence);
// bands / coupling
TWG_DEFINE_ERROR(EdgeUnresolved);
TWG_DEFINE_ERROR(NearDegenerate);
// effective
TWG_DEFINE_ERROR(NotConverged);
TWG_DEFINE_ERROR(InsufficientGrowth);
// bsch
TWG_DEFINE_ERROR(GridTooCoarse);
// fulltube
TWG_DEFINE_ERROR(ResolutionTooCoarse);
TWG_DEFINE_ERROR(FactorizationBreakdown);
// cli
TWG_DEFINE_ERROR(ConfigError);

#undef TWG_DEFINE_ERROR

} // namespace twg
