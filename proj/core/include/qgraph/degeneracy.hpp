#pragma once

// Closed-form location of band crossings of the gamma family
// S = diag(e^{i gamma} I, e^{-i gamma} I) S0.
//
// The reflectionless condition S2hat_11 = 0 reads
//   a e^{i(k+gamma)} + b e^{-i(k+gamma)} = c e^{i phi1} + d e^{-i phi1}
// with polynomial coefficients in S0; eliminating phi1 gives the (|A|, |B|,
// |C|) triangle and the wavenumber relation 2(k+gamma) = delta +- psi; the
// diagonal part then fixes gamma itself through the Q, P, U, Y coefficients.
// The dual one-loop system (loop swap) must single out the same four gamma
// values; gamma_crossings verifies this and throws InconsistentError if not.

#include <array>
#include <vector>

#include "qgraph/cxmat.hpp"
#include "qgraph/scatter.hpp"
#include "qgraph/spectral.hpp"

namespace qgraph {

struct SmallCoeffs {
  Cx a, b, c, d;              // from the S2hat reduction (unbarred)
  Cx abar, bbar, cbar, dbar;  // from the S1hat reduction (barred)
};

/// The eight reflectionless-condition coefficients of the gamma = 0
/// representative. Note bbar = -S11 (sign pattern matches b = -S33).
SmallCoeffs small_coeffs(const Mat4& s0);

struct TriangleSide {
  Cx A, B;
  double C = 0.0;        // |c|^2 - |d|^2
  double D = 0.0;        // |a|^2 - |b|^2
  double g = 0.0;        // g e^{i delta} = (C^2 - |A|^2 - |B|^2)/(A B*)
  double delta = 0.0;
  double psi = 0.0;      // arccos(g/2), defined when solvable
  double psi_tilde = 0.0;// companion angle of the (|A|, |B|, |D|) triangle
  bool solvable = false; // 2|A||B| >= |C^2 - |A|^2 - |B|^2|
};

struct TriangleData {
  TriangleSide unbarred;
  TriangleSide barred;
  bool solvable = false;  // both sides (they coincide for unitary input)
};

/// Triangle/solvability data for both reductions. Throws
/// DegenerateEllipseError when |A||B| < 1e-14 on either side.
TriangleData triangle_data(const SmallCoeffs& c);

/// One side alone (used by the degree computation, which only needs the
/// unbarred ellipses).
TriangleSide triangle_side(Cx a, Cx b, Cx c, Cx d);

struct CrossingSolution {
  double gamma = 0.0;   // in [0, pi)
  int branch = 0;       // 0..3: (psi sign, pi/2 shift)
  double k = 0.0;       // wavenumber at flux_a; flux_b carries k + pi
  FluxPair flux_a;
  FluxPair flux_b;      // = flux_a + (pi, pi)
  int sign = 0;         // Chern jump of the upper band as gamma increases
  bool merged_duplicate = false;  // tangency-adjacent branch collapse
};

/// The four gamma values (mod pi) at which bands of the gamma family cross,
/// each completed with (k, phi1, phi2) and the transition sign. Empty when
/// the triangle is not solvable. Cross-validated against the dual (swapped)
/// system; InconsistentError on disagreement beyond 1e-9.
std::vector<CrossingSolution> gamma_crossings(const Mat4& s0);

/// Chern jump of the upper of the two crossing bands when gamma is swept
/// upward through the crossing. Central differences at step 1e-5.
int transition_sign(const CrossingSolution& sol, const Mat4& s0);

/// Same sign, but for sweeping an arbitrary scatterer parameter upward
/// (phi3 = that parameter). Used for boundary curves in non-gamma scan
/// planes. `axis` names a ScatterParams member.
int transition_sign_along(const CrossingSolution& sol, const ScatterParams& base,
                          const std::string& axis);

struct RealSBoundaries {
  std::vector<double> gammas;           // crossing gammas in [0, pi)
  double E_sq = 0.0;                    // tan^2(k+gamma) at the crossing family
  double Ebar_sq = 0.0;                 // tan^2(k-gamma)
  std::array<double, 4> gamma0_relations{};  // a+b -+ (c+d), a-b -+ (c-d)
};

/// Real-scatterer specialization. Requires S0 real within 1e-12 (throws
/// ComplexInputError). gammas match gamma_crossings; gamma0_relations are the
/// exact gamma = 0 phase-boundary predicates in the (alpha, beta) plane.
RealSBoundaries real_s_boundaries(const ScatterParams& p);

/// The gamma = 0 boundary predicates alone (cheap, for curve tracing).
std::array<double, 4> real_gamma0_relations(const ScatterParams& p);

/// The eight-value necessary-condition set (delta - deltabar +- psi -+ psibar)/4
/// + n pi/2, mod pi. Superset of the gamma_crossings values.
std::vector<double> gamma_necessary_set(const Mat4& s0);

}  // namespace qgraph
