#pragma once

#include <stdexcept>
#include <string>

namespace udkf {

// Base class for everything thrown by this library.
class FilterError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not conform. The message names both shapes.
class DimensionError : public FilterError {
 public:
  using FilterError::FilterError;
};

// Input matrix fails the symmetry precondition of a factorization.
class NotSymmetricError : public FilterError {
 public:
  using FilterError::FilterError;
};

// A pivot D(j,j) fell below the pivot tolerance while a division by it
// was still required; the input is not positive definite at working
// precision.
class SingularPivotError : public FilterError {
 public:
  using FilterError::FilterError;
};

// A factor diagonal required strictly positive came out nonpositive.
class NotPositiveDefiniteError : public FilterError {
 public:
  using FilterError::FilterError;
};

// Rank-one update needs to divide by an (effectively) zero diagonal.
class ZeroPivotError : public FilterError {
 public:
  using FilterError::FilterError;
};

// Scalar update innovation variance ended at or below tolerance; the
// update is ill-posed (r = 0 and H in the null space of P).
class ZeroInnovationVarianceError : public FilterError {
 public:
  using FilterError::FilterError;
};

// Measurement update requires a PSD prior; a D entry was negative.
class NegativePriorDError : public FilterError {
 public:
  using FilterError::FilterError;
};

// NaN or Inf encountered where finite values are required.
class NonFiniteError : public FilterError {
 public:
  using FilterError::FilterError;
};

// Scenario file failed to parse or violated a config invariant.
class ScenarioError : public FilterError {
 public:
  using FilterError::FilterError;
};

}  // namespace udkf
