#include "qgraph/spectral.hpp"

#include <algorithm>
#include <cmath>

#include "qgraph/errors.hpp"

namespace qgraph {

Mat2 lambda2_of(double phi) {
  Mat2 m;
  m(0, 1) = std::polar(1.0, phi);
  m(1, 0) = std::polar(1.0, -phi);
  return m;
}

Mat4 lambda_of(const FluxPair& flux) {
  Mat4 m;
  m(0, 1) = std::polar(1.0, flux.phi1);
  m(1, 0) = std::polar(1.0, -flux.phi1);
  m(2, 3) = std::polar(1.0, flux.phi2);
  m(3, 2) = std::polar(1.0, -flux.phi2);
  return m;
}

double band_sum_anchor(const Mat4& s) { return wrap_angle(-std::arg(det(s))); }

namespace {

// Rotate the ascending k-list until its sum hits the anchor (each cyclic
// rotation moves the sum by exactly 2pi). perm tracks eigenvalue identity.
void anchor_rotate(std::array<double, 4>& k, std::array<int, 4>& perm, double target) {
  double sum = k[0] + k[1] + k[2] + k[3];
  long m = std::lround((target - sum) / kTwoPi);
  while (m > 0) {
    double v = k[0] + kTwoPi;
    int p = perm[0];
    k = {k[1], k[2], k[3], v};
    perm = {perm[1], perm[2], perm[3], p};
    --m;
  }
  while (m < 0) {
    double v = k[3] - kTwoPi;
    int p = perm[3];
    k = {v, k[0], k[1], k[2]};
    perm = {p, perm[0], perm[1], perm[2]};
    ++m;
  }
}

}  // namespace

std::array<double, 4> band_k(const Mat4& s, const FluxPair& flux, double sum_anchor) {
  Mat4 ls = lambda_of(flux) * s;
  auto th = eig_phases(ls);
  std::array<double, 4> k;
  for (size_t i = 0; i < 4; ++i) {
    double v = -th[i];
    if (v >= kPi) v -= kTwoPi;  // to [-pi, pi)
    k[i] = v;
  }
  std::sort(k.begin(), k.end());
  std::array<int, 4> perm = {0, 1, 2, 3};
  anchor_rotate(k, perm, sum_anchor);
  return k;
}

BandSet band_set(const Mat4& s, const FluxPair& flux, const BandSet* ref) {
  assert_unitary(s, 1e-9);
  Mat4 ls = lambda_of(flux) * s;
  EigenSystem es = eig_unitary(ls);

  std::array<double, 4> k;
  std::array<int, 4> src;  // which eigensystem slot feeds band m
  for (size_t i = 0; i < 4; ++i) {
    double v = -es.phases[i];
    if (v >= kPi) v -= kTwoPi;
    k[i] = v;
    src[i] = static_cast<int>(i);
  }
  // ascending with carried indices
  for (size_t i = 0; i < 4; ++i)
    for (size_t j = i + 1; j < 4; ++j)
      if (k[j] < k[i]) {
        std::swap(k[i], k[j]);
        std::swap(src[i], src[j]);
      }
  double target = (ref != nullptr) ? (ref->k[0] + ref->k[1] + ref->k[2] + ref->k[3])
                                   : band_sum_anchor(s);
  anchor_rotate(k, src, target);

  BandSet bs;
  bs.k = k;
  bs.flux = flux;
  for (size_t i = 0; i < 4; ++i) bs.vectors[i] = es.vectors[static_cast<size_t>(src[i])];
  return bs;
}

double min_band_gap(const std::array<double, 4>& k) {
  double g = k[0] + kTwoPi - k[3];
  for (int i = 0; i < 3; ++i) g = std::min(g, k[static_cast<size_t>(i + 1)] - k[static_cast<size_t>(i)]);
  return g;
}

double min_gap_at(const Mat4& s, const FluxPair& flux) {
  Mat4 ls = lambda_of(flux) * s;
  auto th = eig_phases(ls);
  double g = th[0] + kTwoPi - th[3];
  for (int i = 0; i < 3; ++i) g = std::min(g, th[static_cast<size_t>(i + 1)] - th[static_cast<size_t>(i)]);
  return g;
}

namespace {

Mat2 inv2(const Mat2& m, Cx dm) {
  Mat2 r;
  r(0, 0) = m(1, 1) / dm;
  r(1, 1) = m(0, 0) / dm;
  r(0, 1) = -m(0, 1) / dm;
  r(1, 0) = -m(1, 0) / dm;
  return r;
}

// X = M^{-1} B with one step of iterative refinement (used near-singular).
Mat2 solve_refined(const Mat2& m, const Mat2& b, Cx dm) {
  Mat2 mi = inv2(m, dm);
  Mat2 x = mi * b;
  Mat2 resid = b - m * x;
  x = x + mi * resid;
  return x;
}

}  // namespace

Mat2 reduced_s2(const Mat4& s, double k, double phi1) {
  SBlocks b = blocks(s);
  Cx ek = std::polar(1.0, -k);
  Mat2 m = ek * lambda2_of(phi1) - b.s11;
  Cx dm = det(m);
  double admm = std::abs(dm);
  if (admm < 1e-12) throw SingularReductionError("reduced_s2: e^{-ik} Lambda_1 - S11 singular");
  Mat2 x = (admm < 1e-8) ? solve_refined(m, b.s12, dm) : inv2(m, dm) * b.s12;
  return b.s21 * x + b.s22;
}

Mat2 reduced_s1(const Mat4& s, double k, double phi2) {
  SBlocks b = blocks(s);
  Cx ek = std::polar(1.0, -k);
  Mat2 m = ek * lambda2_of(phi2) - b.s22;
  Cx dm = det(m);
  double admm = std::abs(dm);
  if (admm < 1e-12) throw SingularReductionError("reduced_s1: e^{-ik} Lambda_2 - S22 singular");
  Mat2 x = (admm < 1e-8) ? solve_refined(m, b.s21, dm) : inv2(m, dm) * b.s21;
  return b.s11 + b.s12 * x;
}

HField h_field(const Mat4& s, double k, const FluxPair& flux) {
  Mat2 m = std::polar(1.0, k) * (lambda2_of(flux.phi2) * reduced_s2(s, k, flux.phi1));
  PauliDecomp d = pauli_log(m);
  HField h;
  h.h0 = d.h0;
  h.h = d.h;
  h.k = k;
  h.flux = flux;
  return h;
}

HField h_field_near(const Mat4& s, double k, const FluxPair& flux, const PauliDecomp& ref) {
  Mat2 m = std::polar(1.0, k) * (lambda2_of(flux.phi2) * reduced_s2(s, k, flux.phi1));
  PauliDecomp d = pauli_log_near(m, ref);
  HField h;
  h.h0 = d.h0;
  h.h = d.h;
  h.k = k;
  h.flux = flux;
  return h;
}

BandSet continue_bands(const Mat4& s, const BandSet& from, const FluxPair& flux, int max_halvings) {
  // straight path in the flux plane; halve steps while the labeling between
  // consecutive points is ambiguous (some band moved more than half a gap)
  double d1 = flux.phi1 - from.flux.phi1;
  double d2 = flux.phi2 - from.flux.phi2;
  BandSet cur = from;
  double t = 0.0;
  double step = 1.0;
  int halvings = 0;
  while (t < 1.0) {
    double tn = std::min(1.0, t + step);
    FluxPair f(from.flux.phi1 + d1 * tn, from.flux.phi2 + d2 * tn);
    BandSet next = band_set(s, f, &cur);
    double move = 0.0;
    for (size_t i = 0; i < 4; ++i) move = std::max(move, std::abs(next.k[i] - cur.k[i]));
    double gap = min_band_gap(next.k);
    if (move > 0.45 * gap && halvings < max_halvings && step > 1e-6) {
      step *= 0.5;
      ++halvings;
      continue;
    }
    cur = next;
    t = tn;
  }
  return cur;
}

}  // namespace qgraph
