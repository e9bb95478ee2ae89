#pragma once

#include <stdexcept>
#include <string>

namespace eiv {

// Base type for every failure raised by the library. Subclasses carry the
// quantities a caller needs to decide whether a failure is fatal or just a
// replication to be recorded.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed inputs: non-finite entries, dimension mismatches, out-of-range
// probabilities.
class InputError : public Error {
 public:
  using Error::Error;
};

// A matrix required to be positive definite is not. pivot_index is the first
// failing Cholesky pivot, or -1 when the failure was detected spectrally.
class NotPositiveDefiniteError : public Error {
 public:
  NotPositiveDefiniteError(const std::string& what, int pivot_index)
      : Error(what), pivot_index(pivot_index) {}
  int pivot_index = -1;
};

// A solve was refused because lambda_min/lambda_max fell below the
// conditioning threshold.
class IllConditionedError : public Error {
 public:
  IllConditionedError(const std::string& what, double ratio)
      : Error(what), ratio(ratio) {}
  double ratio = 0.0;
};

// The shifted system defining the estimator is numerically singular.
class DegenerateFitError : public Error {
 public:
  using Error::Error;
};

// Plug-in covariance or interval construction failed (singular normalizer,
// nonpositive variance).
class DegenerateInferenceError : public Error {
 public:
  using Error::Error;
};

// A perturbation certificate cannot be evaluated (nonpositive spectral gap,
// perturbation too large).
class CertificateInapplicableError : public Error {
 public:
  using Error::Error;
};

// The requested covariance model does not yield a positive definite matrix.
class ModelInfeasibleError : public Error {
 public:
  using Error::Error;
};

// An efficiency-analysis design is degenerate (zero covariate, infeasible
// variance bound).
class InfeasibleDesignError : public Error {
 public:
  using Error::Error;
};

// Configuration file or manifest problems; maps to CLI exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace eiv
