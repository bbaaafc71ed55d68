#pragma once

// Chern numbers of the four bands over the flux torus, two independent ways:
//
//  * chern_fhs   — discretized Berry curvature: per-band link variables
//                  u_mu(phi) = <v(phi)|v(phi + e_mu 2pi/n)>, plaquette field
//                  f = arg(u1 u2 u1'^-1 u2'^-1) in (-pi, pi], c = (1/2pi) sum f,
//                  with local plaquette subdivision where |f| > pi/2.
//  * chern_degree — degree of the band maps s_j h^(phi): preimages of the
//                  sphere poles from the reflectionless ellipse intersection,
//                  Jacobian signs summed per band.

#include <array>
#include <vector>

#include "qgraph/cxmat.hpp"
#include "qgraph/spectral.hpp"

namespace qgraph {

struct ChernVector {
  std::array<int, 4> c{};
  int grid_n = 0;
  bool converged = false;

  bool operator==(const ChernVector& o) const { return c == o.c; }
};

/// FHS Chern numbers on an n x n flux grid (n >= 8). Throws GapClosureError
/// if the minimal band gap on the grid is below 1e-10. `converged` requires
/// the pre-rounding sums within 1e-3 of integers at n and at 2n with equal
/// rounded values, and no plaquette left unresolved at the refinement cap.
ChernVector chern_fhs(const Mat4& s, int n);

enum class Pole { north, south };

struct PreimagePoint {
  FluxPair flux;
  double k = 0.0;          // wavenumber (mod 2pi) at the preimage
  int band_index = 0;      // 0..3, anchored band labels
  int jacobian_sign = 0;   // +-1
  Pole pole = Pole::north; // pole of the band map f_j = s_j h^
  int s_j = 0;             // band sign in h0 + s|h| = 0 (mod 2pi)
};

struct DegreeResult {
  ChernVector chern;
  std::vector<PreimagePoint> preimages;  // empty when the ellipses miss
};

/// Degree-of-map Chern numbers via pole preimages. NoIntersection (disjoint
/// ellipses) is not an error: all bands trivial. Throws TangentEllipsesError
/// when the solvability inequality is an equality within 1e-9.
DegreeResult chern_degree_detailed(const Mat4& s);
ChernVector chern_degree(const Mat4& s);

/// Sign of (d_phi1 h x d_phi2 h) . h on the band map (k eliminated through
/// the band condition), central differences at step 1e-5. Throws
/// DegenerateJacobianError when |triple product| < 1e-9.
int jacobian_sign(const PreimagePoint& p, const Mat4& s);

}  // namespace qgraph
