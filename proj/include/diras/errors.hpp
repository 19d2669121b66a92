#pragma once

#include <stdexcept>
#include <string>

namespace diras {

/// Base class for all solver errors. Each concrete error carries a stable
/// numeric code used by the CLI as process exit status.
class Error : public std::runtime_error {
  public:
    Error(int code, const std::string& what) : std::runtime_error(what), code_(code) {}
    int code() const noexcept { return code_; }

  private:
    int code_;
};

#define DIRAS_ERROR(Name, Code)                                                   \
    class Name : public Error {                                                   \
      public:                                                                     \
        explicit Name(const std::string& what) : Error(Code, #Name ": " + what) {} \
    }

DIRAS_ERROR(DimensionMismatch, 10);
DIRAS_ERROR(SingularD, 11);
DIRAS_ERROR(SingularStepMatrix, 12);
DIRAS_ERROR(InconsistentInitialState, 13);

DIRAS_ERROR(NotACover, 20);
DIRAS_ERROR(UnknownSelector, 21);
DIRAS_ERROR(EmptyInterface, 22);

DIRAS_ERROR(SingularLocalMatrix, 30);

DIRAS_ERROR(NotTwoPartitions, 40);
DIRAS_ERROR(RankDeficientHistory, 41);
DIRAS_ERROR(UnitEigenvalue, 42);

DIRAS_ERROR(SingularAlgebraicBlock, 50);
DIRAS_ERROR(FloatingNode, 51);
DIRAS_ERROR(UnknownCircuitId, 52);
DIRAS_ERROR(NetlistParse, 53);

DIRAS_ERROR(HistoryNotFull, 60);
DIRAS_ERROR(BadPhasorConfig, 61);

DIRAS_ERROR(CoefficientBlowup, 70);

DIRAS_ERROR(SpecParse, 80);
DIRAS_ERROR(IoError, 81);

#undef DIRAS_ERROR

} // namespace diras
