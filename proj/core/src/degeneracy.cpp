#include "qgraph/degeneracy.hpp"

#include <algorithm>
#include <cmath>

#include "qgraph/errors.hpp"

namespace qgraph {

namespace {

constexpr double kDualTol = 1e-9;

struct QPUY {
  Cx Q1, P1, Q2, P2, U, Y;
};

// Reflectionless coefficients of the S2hat reduction for a bare matrix
// (gamma folded into the entries). 0-based indices; formulas use 1-based.
void unbarred_of(const Mat4& s, Cx& a, Cx& b, Cx& c, Cx& d) {
  a = s(2, 0) * (s(0, 1) * s(1, 2) - s(1, 1) * s(0, 2)) +
      s(2, 1) * (s(1, 0) * s(0, 2) - s(0, 0) * s(1, 2)) +
      s(2, 2) * (s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0));
  b = -s(2, 2);
  c = s(2, 0) * s(1, 2) - s(2, 2) * s(1, 0);
  d = s(2, 1) * s(0, 2) - s(2, 2) * s(0, 1);
}

void barred_of(const Mat4& s, Cx& a, Cx& b, Cx& c, Cx& d) {
  a = s(0, 2) * (s(2, 3) * s(3, 0) - s(3, 3) * s(2, 0)) +
      s(0, 3) * (s(3, 2) * s(2, 0) - s(2, 2) * s(3, 0)) +
      s(0, 0) * (s(2, 2) * s(3, 3) - s(2, 3) * s(3, 2));
  b = -s(0, 0);  // sign pattern matches b = -S33 (the S1hat_11 = 0 identity)
  c = s(0, 2) * s(3, 0) - s(0, 0) * s(3, 2);
  d = s(0, 3) * s(2, 0) - s(0, 0) * s(2, 3);
}

QPUY qpuy_of(const Mat4& s, const TriangleSide& t) {
  Cx q1 = s(3, 0) * (s(0, 1) * s(1, 2) - s(1, 1) * s(0, 2)) +
          s(3, 1) * (s(1, 0) * s(0, 2) - s(0, 0) * s(1, 2)) +
          s(3, 2) * (s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0));
  Cx p1 = -s(3, 2);
  Cx r1 = s(3, 0) * s(1, 2) - s(3, 2) * s(1, 0);
  Cx s1 = s(3, 1) * s(0, 2) - s(3, 2) * s(0, 1);
  Cx q2 = s(2, 0) * (s(0, 1) * s(1, 3) - s(1, 1) * s(0, 3)) +
          s(2, 1) * (s(1, 0) * s(0, 3) - s(0, 0) * s(1, 3)) +
          s(2, 3) * (s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0));
  Cx p2 = -s(2, 3);
  Cx r2 = s(2, 0) * s(1, 3) - s(2, 3) * s(1, 0);
  Cx s2 = s(2, 1) * s(0, 3) - s(2, 3) * s(0, 1);
  Cx u = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
  Cx v = s(1, 0);
  Cx w = s(0, 1);
  QPUY o;
  o.Q1 = q1 * t.C - r1 * t.A - s1 * std::conj(t.B);
  o.P1 = p1 * t.C - r1 * t.B - s1 * std::conj(t.A);
  o.Q2 = q2 * t.C - r2 * t.A - s2 * std::conj(t.B);
  o.P2 = p2 * t.C - r2 * t.B - s2 * std::conj(t.A);
  o.U = u * t.C + v * t.A + w * std::conj(t.B);
  o.Y = -t.C + v * t.B + w * std::conj(t.A);
  return o;
}

TriangleSide side_of(Cx a, Cx b, Cx c, Cx d) {
  TriangleSide t;
  t.A = a * std::conj(c) - std::conj(b) * d;
  t.B = b * std::conj(c) - std::conj(a) * d;
  t.C = std::norm(c) - std::norm(d);
  t.D = std::norm(a) - std::norm(b);
  double ab = std::abs(t.A) * std::abs(t.B);
  if (ab < 1e-14) throw DegenerateEllipseError("triangle_data: |A||B| below 1e-14");
  double num = t.C * t.C - std::norm(t.A) - std::norm(t.B);
  Cx w = num / (t.A * std::conj(t.B));
  t.g = std::abs(w);
  t.delta = std::arg(w);
  t.solvable = (2.0 * ab >= std::abs(num));
  t.psi = std::acos(std::clamp(t.g / 2.0, -1.0, 1.0));
  double argd = -std::abs(t.D * t.D - std::norm(t.A) - std::norm(t.B)) / (2.0 * ab);
  t.psi_tilde = kPi - std::acos(std::clamp(argd, -1.0, 1.0));
  return t;
}

// phi1 with Ce^{i phi1} = Ae^{i(k+g)} + Be^{-i(k+g)}; quadratic fallback when
// C is tiny (|c| ~ |d|), filtered by the conjugate equation.
double recover_phi1(const TriangleSide& t, Cx a, Cx b, Cx c, Cx d, double kpg) {
  Cx lhs = t.A * std::polar(1.0, kpg) + t.B * std::polar(1.0, -kpg);
  if (std::abs(t.C) > 1e-10) return std::arg(lhs / t.C);
  Cx L = a * std::polar(1.0, kpg) + b * std::polar(1.0, -kpg);
  // c z^2 - L z + d = 0, z = e^{i phi1}
  Cx disc = std::sqrt(L * L - 4.0 * c * d);
  Cx z1 = (L + disc) / (2.0 * c);
  Cx z2 = (L - disc) / (2.0 * c);
  auto resid = [&](Cx z) {
    if (std::abs(std::abs(z) - 1.0) > 1e-6) return 1e9;
    Cx zz = z / std::abs(z);
    Cx r = std::conj(a) * std::polar(1.0, -kpg) + std::conj(b) * std::polar(1.0, kpg) -
           std::conj(c) / zz - std::conj(d) * zz;
    return std::abs(r);
  };
  return (resid(z1) <= resid(z2)) ? std::arg(z1) : std::arg(z2);
}

struct RawSolution {
  double gamma, k, phi1, phi2;
  int branch;
};

// The four crossing gammas of the family diag(e^{ig}I, e^{-ig}I) * s0, each
// with (k, phi1, phi2) for the n = 0 intersection point. Pure Eq.-43 route,
// no dual verification here.
std::vector<RawSolution> solve_gammas(const Mat4& s0) {
  Cx a, b, c, d;
  unbarred_of(s0, a, b, c, d);
  TriangleSide t = side_of(a, b, c, d);
  if (!t.solvable) return {};
  QPUY q = qpuy_of(s0, t);
  std::vector<RawSolution> out;
  for (int si = 0; si < 2; ++si) {
    double sgn = (si == 0) ? 1.0 : -1.0;
    double e = t.delta + sgn * t.psi;
    Cx ee = std::polar(1.0, e);
    Cx N = q.Q1 * q.Q2 * ee + q.Q1 * q.P2 + q.P1 * q.Q2 + q.P1 * q.P2 / ee;
    Cx De = q.U * q.U * ee + 2.0 * q.U * q.Y + q.Y * q.Y / ee;
    double chi = std::arg(N / De);
    for (int m = 0; m < 2; ++m) {
      double gam = wrap_pi((chi + e) / 4.0 + m * kPi / 2.0);
      double k = wrap_angle(-gam + e / 2.0);
      double kpg = k + gam;  // 2(k+gamma) = e mod 2pi by construction
      double phi1 = recover_phi1(t, a, b, c, d, kpg);
      // phi2 from the first diagonal equation; fallback to the direct
      // crossing relation if the common denominator is tiny
      Cx den = q.U * std::polar(1.0, 2.0 * gam) + q.Y * std::polar(1.0, -2.0 * k);
      double phi2;
      if (std::abs(den) > 1e-10 * (std::abs(q.U) + std::abs(q.Y) + 1e-300)) {
        Cx num = q.Q1 * std::polar(1.0, kpg) + q.P1 * std::polar(1.0, -kpg);
        phi2 = -std::arg(num / den);
      } else {
        Mat4 sg = apply_gamma(s0, gam);
        Mat2 s2h = reduced_s2(sg, k, phi1);
        phi2 = std::arg(std::polar(1.0, -k) * std::conj(s2h(1, 0)));
      }
      out.push_back(RawSolution{gam, k, phi1, phi2, si * 2 + m});
    }
  }
  return out;
}

Mat4 swap_loops(const Mat4& s) {
  // basis permutation (3,4,1,2): P S P
  static const int p[4] = {2, 3, 0, 1};
  Mat4 r;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) r(i, j) = s(p[i], p[j]);
  return r;
}

double mod_pi_dist(double x, double y) {
  double d = std::fabs(wrap_pi(x) - wrap_pi(y));
  return std::min(d, kPi - d);
}

}  // namespace

SmallCoeffs small_coeffs(const Mat4& s0) {
  SmallCoeffs sc;
  unbarred_of(s0, sc.a, sc.b, sc.c, sc.d);
  barred_of(s0, sc.abar, sc.bbar, sc.cbar, sc.dbar);
  return sc;
}

TriangleData triangle_data(const SmallCoeffs& c) {
  TriangleData t;
  t.unbarred = side_of(c.a, c.b, c.c, c.d);
  t.barred = side_of(c.abar, c.bbar, c.cbar, c.dbar);
  t.solvable = t.unbarred.solvable && t.barred.solvable;
  return t;
}

TriangleSide triangle_side(Cx a, Cx b, Cx c, Cx d) { return side_of(a, b, c, d); }

std::vector<double> gamma_necessary_set(const Mat4& s0) {
  SmallCoeffs sc = small_coeffs(s0);
  TriangleData t = triangle_data(sc);
  if (!t.solvable) return {};
  std::vector<double> out;
  for (double su : {1.0, -1.0})
    for (double sb : {1.0, -1.0}) {
      double base = (t.unbarred.delta - t.barred.delta + su * t.unbarred.psi - sb * t.barred.psi) / 4.0;
      out.push_back(wrap_pi(base));
      out.push_back(wrap_pi(base + kPi / 2.0));
    }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<CrossingSolution> gamma_crossings(const Mat4& s0) {
  assert_unitary(s0, 1e-9);
  auto primary = solve_gammas(s0);
  if (primary.empty()) return {};

  // dual route: the same solver on the loop-swapped matrix locates the same
  // four gammas with the opposite sign (gamma of the swapped family is -gamma)
  auto dual = solve_gammas(swap_loops(s0));
  if (dual.size() != primary.size())
    throw InconsistentError("gamma_crossings: dual system finds a different crossing count");
  for (const auto& p : primary) {
    double best = kPi;
    for (const auto& q : dual) best = std::min(best, mod_pi_dist(p.gamma, -q.gamma));
    if (best > kDualTol)
      throw InconsistentError("gamma_crossings: primary and dual gamma sets disagree");
  }

  std::vector<CrossingSolution> out;
  for (const auto& r : primary) {
    CrossingSolution cs;
    cs.gamma = r.gamma;
    cs.branch = r.branch;
    cs.k = r.k;
    cs.flux_a = FluxPair(r.phi1, r.phi2);
    cs.flux_b = FluxPair(r.phi1 + kPi, r.phi2 + kPi);
    out.push_back(cs);
  }
  // tangency-adjacent duplicate merge
  for (size_t i = 0; i < out.size(); ++i)
    for (size_t j = i + 1; j < out.size(); ++j)
      if (mod_pi_dist(out[i].gamma, out[j].gamma) < 1e-9) {
        out[i].merged_duplicate = true;
        out[j].merged_duplicate = true;
      }
  std::sort(out.begin(), out.end(),
            [](const CrossingSolution& x, const CrossingSolution& y) { return x.gamma < y.gamma; });
  for (auto& cs : out) cs.sign = transition_sign(cs, s0);
  return out;
}

namespace {

// derivatives of (h0, h) wrt (phi1, phi2, p3, k) by central differences,
// where p3 is either gamma or a named scatterer parameter
struct HDerivs {
  std::array<double, 4> dh0{};
  std::array<std::array<double, 4>, 3> dh{};  // [component][variable]
};

template <typename BuildS>
HDerivs h_derivs(BuildS&& build, double phi1, double phi2, double p3, double k) {
  const double eps = 1e-5;
  HDerivs out;
  Mat4 s0 = build(p3);
  Mat2 m0 = std::polar(1.0, k) * (lambda2_of(phi2) * reduced_s2(s0, k, phi1));
  PauliDecomp ref = pauli_log(m0);
  auto eval = [&](double q1, double q2, double q3, double qk) {
    Mat4 s = build(q3);
    Mat2 m = std::polar(1.0, qk) * (lambda2_of(q2) * reduced_s2(s, qk, q1));
    return pauli_log_near(m, ref);
  };
  const std::array<std::array<double, 4>, 4> axes = {{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}};
  for (int v = 0; v < 4; ++v) {
    const auto& ax = axes[static_cast<size_t>(v)];
    PauliDecomp hp = eval(phi1 + eps * ax[0], phi2 + eps * ax[1], p3 + eps * ax[2], k + eps * ax[3]);
    PauliDecomp hm = eval(phi1 - eps * ax[0], phi2 - eps * ax[1], p3 - eps * ax[2], k - eps * ax[3]);
    out.dh0[static_cast<size_t>(v)] = (hp.h0 - hm.h0) / (2.0 * eps);
    for (size_t cmp = 0; cmp < 3; ++cmp)
      out.dh[cmp][static_cast<size_t>(v)] = (hp.h[cmp] - hm.h[cmp]) / (2.0 * eps);
  }
  return out;
}

double det3x3(const std::array<std::array<double, 3>, 3>& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

std::array<double, 3> solve3x3(const std::array<std::array<double, 3>, 3>& m,
                               const std::array<double, 3>& rhs, double dm) {
  // Cramer
  std::array<double, 3> x{};
  for (int c = 0; c < 3; ++c) {
    auto mc = m;
    for (int r = 0; r < 3; ++r) mc[static_cast<size_t>(r)][static_cast<size_t>(c)] = rhs[static_cast<size_t>(r)];
    x[static_cast<size_t>(c)] = det3x3(mc) / dm;
  }
  return x;
}

template <typename BuildS>
int transition_sign_impl(const CrossingSolution& sol, BuildS&& build, double p3_at) {
  HDerivs d = h_derivs(build, sol.flux_a.phi1, sol.flux_a.phi2, p3_at, sol.k);

  double dh0_dk = d.dh0[3];
  std::array<double, 3> dh_dk = {d.dh[0][3], d.dh[1][3], d.dh[2][3]};
  double nk = std::sqrt(dh_dk[0] * dh_dk[0] + dh_dk[1] * dh_dk[1] + dh_dk[2] * dh_dk[2]);
  if (std::abs(dh0_dk) <= nk)
    throw AssumptionViolatedError("transition_sign: |dh0/dk| <= |dh/dk| at the crossing");

  std::array<std::array<double, 3>, 3> jac_k{};   // d h / d(phi1, phi2, k)
  std::array<std::array<double, 3>, 3> jac_p{};   // d h / d(phi1, phi2, p3)
  for (size_t cmp = 0; cmp < 3; ++cmp) {
    jac_k[cmp] = {d.dh[cmp][0], d.dh[cmp][1], d.dh[cmp][3]};
    jac_p[cmp] = {d.dh[cmp][0], d.dh[cmp][1], d.dh[cmp][2]};
  }
  double det_k = det3x3(jac_k);
  if (std::abs(det_k) < 1e-10) throw SingularJacobianError("transition_sign: |det dh/d(phi,k)| < 1e-10");
  double det_p = det3x3(jac_p);
  if (std::abs(det_p) < 1e-12) throw SingularJacobianError("transition_sign: dh/d(phi1,phi2,p3) singular");
  std::array<double, 3> phik = solve3x3(jac_p, dh_dk, det_p);
  double second = dh0_dk - (phik[0] * d.dh0[0] + phik[1] * d.dh0[1] + phik[2] * d.dh0[2]);
  if (std::abs(second) < 1e-12) throw SingularJacobianError("transition_sign: degenerate h0 slope");
  // Jump of the upper band's Chern number for increasing p3 under the FHS
  // orientation used by chern_fhs/chern_degree (opposite overall sign to the
  // naive reading of the crossing-determinant formula).
  double s = -1.0 * (det_k > 0 ? 1.0 : -1.0) * (second > 0 ? 1.0 : -1.0);
  return s > 0 ? 1 : -1;
}

}  // namespace

int transition_sign(const CrossingSolution& sol, const Mat4& s0) {
  auto build = [&](double g) { return apply_gamma(s0, g); };
  return transition_sign_impl(sol, build, sol.gamma);
}

int transition_sign_along(const CrossingSolution& sol, const ScatterParams& base,
                          const std::string& axis) {
  if (axis == "gamma") {
    ScatterParams p = base;
    p.gamma = 0.0;
    Mat4 s0 = build_s0(p);
    return transition_sign_impl(sol, [&](double g) { return apply_gamma(s0, g); }, sol.gamma);
  }
  ScatterParams p = base;
  auto build = [&](double v) {
    ScatterParams q = p;
    q.set(axis, v);
    q.gamma = 0.0;
    return apply_gamma(build_s0(q), sol.gamma);
  };
  return transition_sign_impl(sol, build, base.get(axis));
}

RealSBoundaries real_s_boundaries(const ScatterParams& p) {
  ScatterParams q = p;
  q.gamma = 0.0;
  Mat4 s0 = build_s0(q);
  for (const auto& x : s0.e)
    if (std::abs(x.imag()) > 1e-12) throw ComplexInputError("real_s_boundaries: S0 is not real");

  RealSBoundaries out;
  auto sols = gamma_crossings(s0);
  for (const auto& s : sols) out.gammas.push_back(s.gamma);
  std::sort(out.gammas.begin(), out.gammas.end());

  SmallCoeffs sc = small_coeffs(s0);
  double a = sc.a.real(), b = sc.b.real(), c = sc.c.real(), d = sc.d.real();
  double ab2 = (a + b) / (c + d), am2 = (a - b) / (c - d);
  out.E_sq = -(ab2 * ab2 - 1.0) / (am2 * am2 - 1.0);
  double A = sc.abar.real(), B = sc.bbar.real(), C = sc.cbar.real(), D = sc.dbar.real();
  double bb2 = (A + B) / (C + D), bm2 = (A - B) / (C - D);
  out.Ebar_sq = -(bb2 * bb2 - 1.0) / (bm2 * bm2 - 1.0);

  out.gamma0_relations = real_gamma0_relations(p);
  return out;
}

std::array<double, 4> real_gamma0_relations(const ScatterParams& p) {
  ScatterParams q = p;
  q.gamma = 0.0;
  Mat4 s0 = build_s0(q);
  for (const auto& x : s0.e)
    if (std::abs(x.imag()) > 1e-12) throw ComplexInputError("real_gamma0_relations: S0 is not real");
  SmallCoeffs sc = small_coeffs(s0);
  double a = sc.a.real(), b = sc.b.real(), c = sc.c.real(), d = sc.d.real();
  return {a + b - (c + d), a + b + (c + d), a - b - (c - d), a - b + (c - d)};
}

}  // namespace qgraph
