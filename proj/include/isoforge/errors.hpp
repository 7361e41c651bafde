#pragma once

#include <stdexcept>
#include <string>

namespace isoforge {

/// Broad failure class; the CLI maps it to an exit status.
enum class ErrorKind { data, numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define ISOFORGE_DEFINE_ERROR(Name, Kind)                                      \
  class Name : public Error {                                                  \
   public:                                                                     \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {}   \
  };

// Input files and metadata.
ISOFORGE_DEFINE_ERROR(FormatError, data)
ISOFORGE_DEFINE_ERROR(TruncationError, data)
ISOFORGE_DEFINE_ERROR(ValueError, data)
ISOFORGE_DEFINE_ERROR(IoError, data)
ISOFORGE_DEFINE_ERROR(MetadataRequiredError, data)
ISOFORGE_DEFINE_ERROR(EmptySelectionError, data)
ISOFORGE_DEFINE_ERROR(NotFoundError, data)
ISOFORGE_DEFINE_ERROR(InsufficientAnnotationError, data)
ISOFORGE_DEFINE_ERROR(CardinalityError, data)
ISOFORGE_DEFINE_ERROR(DimError, data)

// Numerical preconditions and solver failures.
ISOFORGE_DEFINE_ERROR(EmptyInputError, numeric)
ISOFORGE_DEFINE_ERROR(RankError, numeric)
ISOFORGE_DEFINE_ERROR(ZeroVectorError, numeric)
ISOFORGE_DEFINE_ERROR(DegenerateInputError, numeric)
ISOFORGE_DEFINE_ERROR(NormError, numeric)
ISOFORGE_DEFINE_ERROR(NumericsError, numeric)

#undef ISOFORGE_DEFINE_ERROR

}  // namespace isoforge
