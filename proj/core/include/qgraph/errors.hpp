#pragma once

#include <stdexcept>
#include <string>

namespace qgraph {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Matrix fails the unitarity check.
struct NonUnitaryError : Error {
  using Error::Error;
};

// Iterative eigenphase polish exceeded its iteration cap.
struct NoConvergenceError : Error {
  using Error::Error;
};

// e^{-ik} Lambda_1 - S11 (or the mirror block) is singular; the one-loop
// reduction does not exist at this (k, flux).
struct SingularReductionError : Error {
  using Error::Error;
};

// Band gap below threshold somewhere on the flux grid; the parameters sit on
// (or numerically at) a phase boundary.
struct GapClosureError : Error {
  using Error::Error;
};

// The two ellipses of the reflectionless condition are tangent: the sphere
// poles are singular values of the h-map.
struct TangentEllipsesError : Error {
  using Error::Error;
};

struct DegenerateEllipseError : Error {
  using Error::Error;
};

struct DegenerateJacobianError : Error {
  using Error::Error;
};

// Primary and dual crossing solvers disagree; signals a branch error.
struct InconsistentError : Error {
  using Error::Error;
};

// |dh0/dk| > |dh/dk| fails at a crossing; the transition-sign formula does
// not apply.
struct AssumptionViolatedError : Error {
  using Error::Error;
};

struct SingularJacobianError : Error {
  using Error::Error;
};

// Scatterer expected to be real but has complex entries.
struct ComplexInputError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct ValidationError : Error {
  using Error::Error;
};

}  // namespace qgraph
