#pragma once

#include <stdexcept>
#include <string>

namespace dml {

// Base class for all domain errors. CLI maps these to exit code 1,
// IoError to exit code 3.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct NormTooSmall : Error {
  explicit NormTooSmall(double norm)
      : Error("vector norm " + std::to_string(norm) +
              " below 1e-12; refusing to normalize") {}
};

struct DimMismatch : Error {
  using Error::Error;
};

struct EmptyPairSet : Error {
  EmptyPairSet() : Error("pair set has no positives and no negatives") {}
};
struct EmptyTripletSet : Error {
  EmptyTripletSet() : Error("triplet set is empty") {}
};
struct EmptyTupletSet : Error {
  EmptyTupletSet() : Error("tuplet set is empty") {}
};

struct EmptyClass : Error {
  EmptyClass() : Error("class has no samples") {}
};
struct UnknownClass : Error {
  explicit UnknownClass(int label)
      : Error("label " + std::to_string(label) + " not covered by density state") {}
};
struct AllSingletonClasses : Error {
  AllSingletonClasses()
      : Error("no class in the batch has >= 2 samples; density undefined") {}
};

struct CacheMismatch : Error {
  using Error::Error;
};
struct DivergenceDetected : Error {
  using Error::Error;
};

struct InsufficientClasses : Error {
  using Error::Error;
};
struct InsufficientSamples : Error {
  using Error::Error;
};
struct NoValidTriplets : Error {
  using Error::Error;
};
struct NoValidTuplets : Error {
  using Error::Error;
};

struct TooFewPoints : Error {
  using Error::Error;
};
struct LengthMismatch : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};
struct ParseError : IoError {
  using IoError::IoError;
};
struct DimInconsistent : IoError {
  using IoError::IoError;
};
struct VersionMismatch : IoError {
  using IoError::IoError;
};
struct CorruptCheckpoint : IoError {
  using IoError::IoError;
};

}  // namespace dml
