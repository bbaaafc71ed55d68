#pragma once

// Spectral side of the figure-eight graph: flux matrix Lambda, band
// wavenumbers of Lambda*S with the sum-anchored ordering, reduced one-loop
// scattering matrices S1hat/S2hat, and the Pauli field (h0, h) of
// e^{ik} Lambda_2 S2hat.
//
// Band labels: e^{-i k_j} are the eigenvalues of Lambda S. The labels at any
// flux are the unique cyclically-increasing 2pi-lifts whose sum equals the
// fixed anchor sum (det Lambda = 1, so sum k_j = -arg det S mod 2pi is flux
// independent). Edge length L = 1 throughout.

#include <array>
#include <optional>
#include <vector>

#include "qgraph/cxmat.hpp"

namespace qgraph {

struct FluxPair {
  double phi1 = 0.0;
  double phi2 = 0.0;

  FluxPair() = default;
  FluxPair(double p1, double p2) : phi1(wrap_2pi(p1)), phi2(wrap_2pi(p2)) {}

  FluxPair shifted(double d1, double d2) const { return FluxPair(phi1 + d1, phi2 + d2); }
};

/// Magnetic phase-shift matrix Lambda = Lambda_1 (+) Lambda_2, det = 1.
Mat4 lambda_of(const FluxPair& flux);

/// One antidiagonal block [[0, e^{i phi}], [e^{-i phi}, 0]].
Mat2 lambda2_of(double phi);

struct BandSet {
  std::array<double, 4> k{};       // ascending, sum anchored
  std::array<Vec4, 4> vectors{};   // eigenvectors of Lambda S for e^{-i k_j}
  FluxPair flux;
};

/// Band wavenumbers (and eigenvectors) of Lambda(flux) * s. Without `ref` the
/// anchor sum is the representative of -arg det(s) in (-pi, pi]; with `ref`
/// the labels continue ref's anchor (sum(ref.k)).
BandSet band_set(const Mat4& s, const FluxPair& flux, const BandSet* ref = nullptr);

/// Wavenumbers only (no eigenvectors); same labeling rules.
std::array<double, 4> band_k(const Mat4& s, const FluxPair& flux, double sum_anchor);

/// Canonical anchor: representative of -arg det(s) in (-pi, pi].
double band_sum_anchor(const Mat4& s);

/// Minimum circular gap between consecutive bands (includes k1+2pi vs k4).
double min_band_gap(const std::array<double, 4>& k);
double min_gap_at(const Mat4& s, const FluxPair& flux);

/// S2hat(k) = S21 (e^{-ik} Lambda_1 - S11)^{-1} S12 + S22. Unitary for real k.
/// Throws SingularReductionError when |det(e^{-ik} Lambda_1 - S11)| < 1e-12.
Mat2 reduced_s2(const Mat4& s, double k, double phi1);

/// Mirror reduction: S1hat(k) = S11 + S12 (e^{-ik} Lambda_2 - S22)^{-1} S21.
Mat2 reduced_s1(const Mat4& s, double k, double phi2);

struct HField {
  double h0 = 0.0;
  std::array<double, 3> h{};
  double k = 0.0;
  FluxPair flux;
};

/// Pauli field of e^{ik} Lambda_2(phi2) S2hat(k, phi1). Vanishes at band
/// crossings. k is a free variable here (not restricted on-shell).
HField h_field(const Mat4& s, double k, const FluxPair& flux);

/// Branch-matched variant for finite-difference stencils.
HField h_field_near(const Mat4& s, double k, const FluxPair& flux, const PauliDecomp& ref);

/// Continue band labels along a straight flux path from `from` to `flux`,
/// halving the step while adjacent labels are ambiguous. Used where a path
/// passes close to degeneracies; away from them it agrees with band_set.
BandSet continue_bands(const Mat4& s, const BandSet& from, const FluxPair& flux,
                       int max_halvings = 20);

}  // namespace qgraph
