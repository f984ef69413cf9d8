#pragma once

#include <stdexcept>
#include <string>

namespace nrdf {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// precondition violations
struct DimensionMismatch : Error {
  using Error::Error;
};
struct StepTooLarge : Error {
  using Error::Error;
};
struct NearSingularTransport : Error {
  using Error::Error;
};
struct NonUnitQuaternion : Error {
  using Error::Error;
};
struct EmptyDataset : Error {
  using Error::Error;
};

// file problems
struct IoError : Error {
  using Error::Error;
};
struct MalformedFile : Error {
  using Error::Error;
};
struct MalformedCheckpoint : Error {
  using Error::Error;
};
struct ArchitectureMismatch : Error {
  using Error::Error;
};

// numerical failures
struct GuardExhausted : Error {
  using Error::Error;
};
struct VanishingGradient : Error {
  using Error::Error;
};
struct DivergedTraining : Error {
  using Error::Error;
};

}  // namespace nrdf
