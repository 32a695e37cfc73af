#pragma once

#include <stdexcept>
#include <string>

namespace esim {

/// Base of every error raised by the library. Callers that only need to
/// report a failure can catch this; tests match the concrete subclasses.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define ESIM_DEFINE_ERROR(Name)          \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  }

// datamodel
ESIM_DEFINE_ERROR(MissingColumn);
ESIM_DEFINE_ERROR(BadReference);
ESIM_DEFINE_ERROR(NoSamples);
ESIM_DEFINE_ERROR(InvalidConfig);

// abm
ESIM_DEFINE_ERROR(EmptyCandidateSet);
ESIM_DEFINE_ERROR(InconsistentReplay);

// energymodel
ESIM_DEFINE_ERROR(NonPositiveSigma);
ESIM_DEFINE_ERROR(UnknownRadioType);
ESIM_DEFINE_ERROR(UnknownTxMode);
ESIM_DEFINE_ERROR(TooManyCarriers);
ESIM_DEFINE_ERROR(EmptyTrainingSet);

// ratemodel
ESIM_DEFINE_ERROR(ZeroActiveTime);
ESIM_DEFINE_ERROR(EmptyCounters);
ESIM_DEFINE_ERROR(UnknownCell);

// harness
ESIM_DEFINE_ERROR(InvalidSpec);
ESIM_DEFINE_ERROR(LengthMismatch);
ESIM_DEFINE_ERROR(EmptySeries);
ESIM_DEFINE_ERROR(KeyMismatch);

#undef ESIM_DEFINE_ERROR

/// A row that violates the file schema or a record invariant. Carries the
/// 1-based data row index (header excluded) so the offending line can be found.
class MalformedRow : public Error {
 public:
  MalformedRow(std::string file, std::size_t row, const std::string& what)
      : Error(file + ": row " + std::to_string(row) + ": " + what),
        file_(std::move(file)),
        row_(row) {}

  const std::string& file() const { return file_; }
  std::size_t row() const { return row_; }

 private:
  std::string file_;
  std::size_t row_;
};

}  // namespace esim
