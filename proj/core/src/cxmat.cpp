#include "qgraph/cxmat.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "qgraph/errors.hpp"

namespace qgraph {

double wrap_angle(double x) {
  double y = std::remainder(x, kTwoPi);
  if (y <= -kPi) y += kTwoPi;
  return y;
}

double wrap_2pi(double x) {
  double y = std::fmod(x, kTwoPi);
  if (y < 0) y += kTwoPi;
  if (y >= kTwoPi) y -= kTwoPi;
  return y;
}

double wrap_pi(double x) {
  double y = std::fmod(x, kPi);
  if (y < 0) y += kPi;
  if (y >= kPi) y -= kPi;
  return y;
}

Mat2 Mat2::identity() {
  Mat2 m;
  m(0, 0) = m(1, 1) = 1.0;
  return m;
}
Mat2 Mat2::zero() { return Mat2{}; }

Mat4 Mat4::identity() {
  Mat4 m;
  for (int i = 0; i < 4; ++i) m(i, i) = 1.0;
  return m;
}
Mat4 Mat4::zero() { return Mat4{}; }

Mat2 operator*(const Mat2& a, const Mat2& b) {
  Mat2 r;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) r(i, j) = a(i, 0) * b(0, j) + a(i, 1) * b(1, j);
  return r;
}

Mat4 operator*(const Mat4& a, const Mat4& b) {
  Mat4 r;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      Cx s = 0.0;
      for (int l = 0; l < 4; ++l) s += a(i, l) * b(l, j);
      r(i, j) = s;
    }
  return r;
}

Mat2 operator*(Cx s, const Mat2& m) {
  Mat2 r = m;
  for (auto& x : r.e) x *= s;
  return r;
}
Mat4 operator*(Cx s, const Mat4& m) {
  Mat4 r = m;
  for (auto& x : r.e) x *= s;
  return r;
}

Mat2 operator-(const Mat2& a, const Mat2& b) {
  Mat2 r;
  for (size_t i = 0; i < 4; ++i) r.e[i] = a.e[i] - b.e[i];
  return r;
}
Mat4 operator-(const Mat4& a, const Mat4& b) {
  Mat4 r;
  for (size_t i = 0; i < 16; ++i) r.e[i] = a.e[i] - b.e[i];
  return r;
}
Mat2 operator+(const Mat2& a, const Mat2& b) {
  Mat2 r;
  for (size_t i = 0; i < 4; ++i) r.e[i] = a.e[i] + b.e[i];
  return r;
}
Mat4 operator+(const Mat4& a, const Mat4& b) {
  Mat4 r;
  for (size_t i = 0; i < 16; ++i) r.e[i] = a.e[i] + b.e[i];
  return r;
}

Vec4 operator*(const Mat4& m, const Vec4& v) {
  Vec4 r{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) r[static_cast<size_t>(i)] += m(i, j) * v[static_cast<size_t>(j)];
  return r;
}

Vec2 operator*(const Mat2& m, const Vec2& v) {
  Vec2 r{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) r[static_cast<size_t>(i)] += m(i, j) * v[static_cast<size_t>(j)];
  return r;
}

Mat2 adjoint(const Mat2& m) {
  Mat2 r;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) r(i, j) = std::conj(m(j, i));
  return r;
}

Mat4 adjoint(const Mat4& m) {
  Mat4 r;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) r(i, j) = std::conj(m(j, i));
  return r;
}

Cx det(const Mat2& m) { return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0); }

namespace {

Cx det3(Cx a, Cx b, Cx c, Cx d, Cx e, Cx f, Cx g, Cx h, Cx i) {
  return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g);
}

}  // namespace

Cx det(const Mat4& m) {
  Cx r = 0.0;
  for (int j = 0; j < 4; ++j) {
    std::array<Cx, 9> sub;
    int idx = 0;
    for (int r_ = 1; r_ < 4; ++r_)
      for (int c_ = 0; c_ < 4; ++c_)
        if (c_ != j) sub[static_cast<size_t>(idx++)] = m(r_, c_);
    Cx mm = det3(sub[0], sub[1], sub[2], sub[3], sub[4], sub[5], sub[6], sub[7], sub[8]);
    r += ((j % 2) ? -1.0 : 1.0) * m(0, j) * mm;
  }
  return r;
}

double max_abs(const Mat2& m) {
  double r = 0.0;
  for (const auto& x : m.e) r = std::max(r, std::abs(x));
  return r;
}
double max_abs(const Mat4& m) {
  double r = 0.0;
  for (const auto& x : m.e) r = std::max(r, std::abs(x));
  return r;
}

double unitarity_defect(const Mat2& m) { return max_abs(m * adjoint(m) - Mat2::identity()); }
double unitarity_defect(const Mat4& m) { return max_abs(m * adjoint(m) - Mat4::identity()); }

bool is_unitary(const Mat2& m, double tol) { return unitarity_defect(m) <= tol; }
bool is_unitary(const Mat4& m, double tol) { return unitarity_defect(m) <= tol; }

void assert_unitary(const Mat2& m, double tol) {
  if (!is_unitary(m, tol)) throw NonUnitaryError("2x2 matrix fails unitarity check");
}
void assert_unitary(const Mat4& m, double tol) {
  if (!is_unitary(m, tol)) throw NonUnitaryError("4x4 matrix fails unitarity check");
}

Cx dot(const Vec4& a, const Vec4& b) {
  Cx s = 0.0;
  for (size_t i = 0; i < 4; ++i) s += std::conj(a[i]) * b[i];
  return s;
}
Cx dot(const Vec2& a, const Vec2& b) { return std::conj(a[0]) * b[0] + std::conj(a[1]) * b[1]; }

double norm(const Vec4& v) { return std::sqrt(std::abs(dot(v, v))); }

// --------------------------------------------------------------------------
// Eigenphases of a 4x4 unitary
// --------------------------------------------------------------------------
//
// p(z) = z^4 + c3 z^3 + c2 z^2 + c1 z + c0 is self-inversive, so with
// phi0 = arg c0 the function w(t) = Re[e^{-i(2t + phi0/2)} p(e^{it})] is real
// with the eigenphases as its roots. Ferrari's formula seeds Newton on w.

namespace {

struct Quartic {
  Cx c3, c2, c1, c0;
};

Quartic char_poly(const Mat4& m) {
  // Faddeev-LeVerrier via power sums.
  Mat4 m2 = m * m;
  Mat4 m3 = m2 * m;
  Mat4 m4 = m3 * m;
  auto tr = [](const Mat4& a) { return a(0, 0) + a(1, 1) + a(2, 2) + a(3, 3); };
  Cx p1 = tr(m), p2 = tr(m2), p3 = tr(m3), p4 = tr(m4);
  Cx e1 = p1;
  Cx e2 = (e1 * p1 - p2) / 2.0;
  Cx e3 = (e2 * p1 - e1 * p2 + p3) / 3.0;
  Cx e4 = (e3 * p1 - e2 * p2 + e1 * p3 - p4) / 4.0;
  return Quartic{-e1, e2, -e3, e4};
}

std::array<Cx, 2> quadratic_roots(Cx b, Cx c) {
  // z^2 + b z + c, numerically stable split
  Cx disc = std::sqrt(b * b - 4.0 * c);
  Cx q = (std::real(std::conj(b) * disc) >= 0) ? -0.5 * (b + disc) : -0.5 * (b - disc);
  Cx r0 = q;
  Cx r1 = (std::abs(q) > 1e-300) ? c / q : -b - q;
  return {r0, r1};
}

std::array<Cx, 3> cubic_roots(Cx a2, Cx a1, Cx a0) {
  // z^3 + a2 z^2 + a1 z + a0, Cardano
  Cx p = a1 - a2 * a2 / 3.0;
  Cx q = 2.0 * a2 * a2 * a2 / 27.0 - a2 * a1 / 3.0 + a0;
  Cx disc = q * q / 4.0 + p * p * p / 27.0;
  Cx sq = std::sqrt(disc);
  Cx u3 = -q / 2.0 + sq;
  if (std::abs(u3) < 1e-30) u3 = -q / 2.0 - sq;
  Cx u = std::pow(u3, Cx(1.0 / 3.0));
  if (std::abs(u) < 1e-300) {
    return {-a2 / 3.0, -a2 / 3.0, -a2 / 3.0};
  }
  const Cx w(-0.5, 0.8660254037844386467637231707529362);
  std::array<Cx, 3> out;
  Cx uu = u;
  for (int i = 0; i < 3; ++i) {
    Cx v = (std::abs(uu) > 1e-300) ? p / (3.0 * uu) : Cx(0.0);
    out[static_cast<size_t>(i)] = uu - v - a2 / 3.0;
    uu *= w;
  }
  return out;
}

std::array<Cx, 4> ferrari_roots(const Quartic& q) {
  // depressed quartic y^4 + p y^2 + r y + s, z = y - c3/4
  Cx c3 = q.c3, c2 = q.c2, c1 = q.c1, c0 = q.c0;
  Cx sh = c3 / 4.0;
  Cx p = c2 - 3.0 * c3 * c3 / 8.0;
  Cx r = c1 - c3 * c2 / 2.0 + c3 * c3 * c3 / 8.0;
  Cx s = c0 - c3 * c1 / 4.0 + c3 * c3 * c2 / 16.0 - 3.0 * c3 * c3 * c3 * c3 / 256.0;
  std::array<Cx, 4> roots;
  if (std::abs(r) < 1e-14) {
    // biquadratic
    auto z2 = quadratic_roots(p, s);
    Cx s0 = std::sqrt(z2[0]), s1 = std::sqrt(z2[1]);
    roots = {s0 - sh, -s0 - sh, s1 - sh, -s1 - sh};
    return roots;
  }
  // resolvent cubic: m^3 + p m^2 + (p^2/4 - s) m - r^2/8 = 0
  auto ms = cubic_roots(p, p * p / 4.0 - s, -r * r / 8.0);
  // pick the root with the largest |m| to stabilize the square roots
  Cx m = ms[0];
  for (const auto& cand : ms)
    if (std::abs(cand) > std::abs(m)) m = cand;
  Cx sqrt2m = std::sqrt(2.0 * m);
  if (std::abs(sqrt2m) < 1e-150) {
    auto z2 = quadratic_roots(p, s);
    Cx s0 = std::sqrt(z2[0]), s1 = std::sqrt(z2[1]);
    return {s0 - sh, -s0 - sh, s1 - sh, -s1 - sh};
  }
  Cx t1 = p / 2.0 + m;
  Cx t2 = r / (2.0 * sqrt2m);
  auto r01 = quadratic_roots(sqrt2m, t1 - t2);
  auto r23 = quadratic_roots(-sqrt2m, t1 + t2);
  return {r01[0] - sh, r01[1] - sh, r23[0] - sh, r23[1] - sh};
}

}  // namespace

std::array<double, 4> eig_phases(const Mat4& m, double unitary_tol) {
  if (!is_unitary(m, unitary_tol)) throw NonUnitaryError("eig_phases: input not unitary");
  Quartic q = char_poly(m);
  double phi0 = std::arg(q.c0);
  double hp = 0.5 * phi0;

  auto wfun = [&](double t) {
    return 2.0 * std::cos(2.0 * t - hp) + 2.0 * std::real(q.c3 * std::polar(1.0, t - hp)) +
           std::real(q.c2 * std::polar(1.0, -hp));
  };
  auto wder = [&](double t) {
    return -4.0 * std::sin(2.0 * t - hp) - 2.0 * std::imag(q.c3 * std::polar(1.0, t - hp));
  };
  auto wder2 = [&](double t) {
    return -8.0 * std::cos(2.0 * t - hp) - 2.0 * std::real(q.c3 * std::polar(1.0, t - hp));
  };

  // seeds from Ferrari, projected to the circle
  auto seeds = ferrari_roots(q);
  std::array<double, 4> th;
  for (size_t i = 0; i < 4; ++i) th[i] = std::arg(seeds[i]);

  // Newton polish on the real circle function
  for (size_t i = 0; i < 4; ++i) {
    double t = th[i];
    for (int it = 0; it < 60; ++it) {
      double w = wfun(t);
      double d = wder(t);
      if (std::abs(d) < 1e-13) break;  // near a double root; resolved below
      double step = w / d;
      t -= step;
      if (std::abs(step) < 1e-15) break;
    }
    th[i] = wrap_angle(t);
  }

  // resolve near-double pairs through the extremum of w: around a double root
  // w(t) ~ w0 + w''(tc)(t - tc)^2/2 with w0 -> 0
  std::array<double, 4> sorted = th;
  std::sort(sorted.begin(), sorted.end());
  for (size_t i = 0; i < 4; ++i) {
    size_t j = (i + 1) % 4;
    double lo = sorted[i];
    double hi = (j == 0) ? sorted[0] + kTwoPi : sorted[j];
    if (hi - lo > 1e-6) continue;
    double tc = 0.5 * (lo + hi);
    for (int it = 0; it < 40; ++it) {
      double d1 = wder(tc), d2 = wder2(tc);
      if (std::abs(d2) < 1e-12) break;
      double step = d1 / d2;
      tc -= step;
      if (std::abs(step) < 1e-15) break;
    }
    double w0 = wfun(tc), w2 = wder2(tc);
    double rad2 = (std::abs(w2) > 1e-12) ? -2.0 * w0 / w2 : 0.0;
    double rad = rad2 > 0 ? std::sqrt(rad2) : 0.0;
    sorted[i] = tc - rad;
    if (j == 0)
      sorted[0] = wrap_angle(tc + rad);
    else
      sorted[j] = tc + rad;
  }
  for (auto& t : sorted) t = wrap_angle(t);
  std::sort(sorted.begin(), sorted.end());

  // Newton can merge two seeds onto one root and lose another; detect via the
  // residual check below and recover from a dense scan.
  double scale0 = 4.0 + 3.0 * std::abs(q.c3) + 2.0 * std::abs(q.c2) + std::abs(q.c1);
  bool suspect = false;
  {
    // product of (z - e^{i t_j}) must reproduce p: compare constant term
    Cx prod = 1.0;
    for (double t : sorted) prod *= std::polar(1.0, t);
    if (std::abs(prod - q.c0) > 1e-6) suspect = true;
    for (double t : sorted) {
      Cx z = std::polar(1.0, t);
      Cx pz = (((z + q.c3) * z + q.c2) * z + q.c1) * z + q.c0;
      if (std::abs(pz) > 1e-8 * scale0) suspect = true;
    }
  }
  if (suspect) {
    std::vector<double> roots;
    const int N = 1440;
    double prev_t = -kPi, prev_w = wfun(-kPi);
    for (int jj = 1; jj <= N; ++jj) {
      double tj = -kPi + kTwoPi * jj / N;
      double wj = wfun(tj);
      if (prev_w == 0.0) roots.push_back(prev_t);
      if (prev_w * wj < 0) {
        double lo = prev_t, hi = tj, flo = prev_w;
        for (int b = 0; b < 80; ++b) {
          double mid = 0.5 * (lo + hi);
          double fm = wfun(mid);
          if (flo * fm <= 0)
            hi = mid;
          else {
            lo = mid;
            flo = fm;
          }
        }
        roots.push_back(0.5 * (lo + hi));
      }
      prev_t = tj;
      prev_w = wj;
    }
    // touching (double) roots: minima of |w| below tolerance
    for (int jj = 0; jj < N; ++jj) {
      double tj = -kPi + kTwoPi * (jj + 0.5) / N;
      double tc = tj;
      for (int it = 0; it < 40; ++it) {
        double d1 = wder(tc), d2 = wder2(tc);
        if (std::abs(d2) < 1e-12) break;
        tc -= d1 / d2;
      }
      if (std::abs(wfun(tc)) < 1e-9 * scale0) {
        bool dup = false;
        for (double r : roots)
          if (std::abs(wrap_angle(r - tc)) < 1e-6) dup = true;
        if (!dup) {
          roots.push_back(tc);
          roots.push_back(tc);
        }
      }
    }
    if (roots.size() >= 4) {
      std::sort(roots.begin(), roots.end(), [&](double x, double y) {
        Cx zx = std::polar(1.0, x), zy = std::polar(1.0, y);
        Cx px = (((zx + q.c3) * zx + q.c2) * zx + q.c1) * zx + q.c0;
        Cx py = (((zy + q.c3) * zy + q.c2) * zy + q.c1) * zy + q.c0;
        return std::abs(px) < std::abs(py);
      });
      for (size_t i = 0; i < 4; ++i) sorted[i] = wrap_angle(roots[i]);
      std::sort(sorted.begin(), sorted.end());
    }
  }

  // sanity: residuals of the quartic on the circle, and the root product
  double scale = 4.0 + 3.0 * std::abs(q.c3) + 2.0 * std::abs(q.c2) + std::abs(q.c1);
  Cx prod = 1.0;
  for (double t : sorted) {
    Cx z = std::polar(1.0, t);
    prod *= z;
    Cx pz = (((z + q.c3) * z + q.c2) * z + q.c1) * z + q.c0;
    if (std::abs(pz) > 1e-7 * scale) throw NoConvergenceError("eig_phases: root polish failed");
  }
  if (std::abs(prod - q.c0) > 1e-6) throw NoConvergenceError("eig_phases: root set inconsistent");
  return sorted;
}

namespace {

// Spectral projector route: P = prod_{m not in cluster} (M - z_m I)/(z_c - z_m),
// orthonormalized columns span the cluster eigenspace.
std::array<Vec4, 4> cluster_vectors(const Mat4& m, const std::array<double, 4>& th) {
  std::array<Vec4, 4> vecs{};
  std::array<bool, 4> donef{};
  for (size_t i = 0; i < 4; ++i) {
    if (donef[i]) continue;
    // cluster = indices with phase within kDegenerateTol of th[i] (chained)
    std::array<size_t, 4> cluster{};
    size_t csize = 0;
    for (size_t j = 0; j < 4; ++j) {
      if (std::abs(wrap_angle(th[j] - th[i])) < kDegenerateTol) cluster[csize++] = j;
    }
    Cx zc = std::polar(1.0, th[i]);
    Mat4 p = Mat4::identity();
    for (size_t j = 0; j < 4; ++j) {
      bool inc = false;
      for (size_t t = 0; t < csize; ++t)
        if (cluster[t] == j) inc = true;
      if (inc) continue;
      Cx zm = std::polar(1.0, th[j]);
      Mat4 f = Mat4::zero();
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) f(r, c) = m(r, c) - ((r == c) ? zm : Cx(0.0));
      Cx inv = 1.0 / (zc - zm);
      p = p * (inv * f);
    }
    // orthonormalize the projector columns, keep csize of them (pivot by norm)
    std::array<Vec4, 4> cols{};
    for (int c = 0; c < 4; ++c)
      for (int r = 0; r < 4; ++r) cols[static_cast<size_t>(c)][static_cast<size_t>(r)] = p(r, c);
    std::array<Vec4, 4> basis{};
    size_t nb = 0;
    for (size_t pass = 0; pass < 4 && nb < csize; ++pass) {
      // pick remaining column with the largest residual norm
      double bestn = -1.0;
      size_t bestc = 0;
      for (size_t c = 0; c < 4; ++c) {
        Vec4 v = cols[c];
        for (size_t b = 0; b < nb; ++b) {
          Cx ov = dot(basis[b], v);
          for (size_t r = 0; r < 4; ++r) v[r] -= ov * basis[b][r];
        }
        double nn = norm(v);
        if (nn > bestn) {
          bestn = nn;
          bestc = c;
        }
      }
      Vec4 v = cols[bestc];
      for (size_t b = 0; b < nb; ++b) {
        Cx ov = dot(basis[b], v);
        for (size_t r = 0; r < 4; ++r) v[r] -= ov * basis[b][r];
      }
      double nn = norm(v);
      if (nn < 1e-12) continue;
      for (size_t r = 0; r < 4; ++r) v[r] /= nn;
      // re-orthogonalize once
      for (size_t b = 0; b < nb; ++b) {
        Cx ov = dot(basis[b], v);
        for (size_t r = 0; r < 4; ++r) v[r] -= ov * basis[b][r];
      }
      nn = norm(v);
      for (size_t r = 0; r < 4; ++r) v[r] /= nn;
      basis[nb++] = v;
    }
    for (size_t t = 0; t < csize; ++t) {
      vecs[cluster[t]] = basis[std::min(t, nb ? nb - 1 : 0)];
      if (t < nb) vecs[cluster[t]] = basis[t];
      donef[cluster[t]] = true;
    }
  }
  return vecs;
}

}  // namespace

EigenSystem eig_unitary(const Mat4& m, double unitary_tol) {
  EigenSystem es;
  es.phases = eig_phases(m, unitary_tol);
  es.vectors = cluster_vectors(m, es.phases);
  // residual check with one refinement attempt via inverse iteration
  for (size_t j = 0; j < 4; ++j) {
    Cx z = std::polar(1.0, es.phases[j]);
    Vec4 mv = m * es.vectors[j];
    double res = 0.0;
    for (size_t r = 0; r < 4; ++r) res = std::max(res, std::abs(mv[r] - z * es.vectors[j][r]));
    if (res > 1e-9) {
      // polish by projecting through the projector once more
      auto again = cluster_vectors(m, es.phases);
      es.vectors[j] = again[j];
      mv = m * es.vectors[j];
      res = 0.0;
      for (size_t r = 0; r < 4; ++r) res = std::max(res, std::abs(mv[r] - z * es.vectors[j][r]));
      if (res > 1e-8) throw NoConvergenceError("eig_unitary: eigenvector residual too large");
    }
  }
  return es;
}

std::array<double, 2> eig_phases2(const Mat2& m, double unitary_tol) {
  if (!is_unitary(m, unitary_tol)) throw NonUnitaryError("eig_phases2: input not unitary");
  Cx tr = m(0, 0) + m(1, 1);
  Cx dd = det(m);
  double phi0 = std::arg(dd);
  double x = 0.5 * std::real(tr * std::polar(1.0, -0.5 * phi0));
  x = std::clamp(x, -1.0, 1.0);
  double ac = std::acos(x);
  double t0 = wrap_angle(0.5 * phi0 - ac);
  double t1 = wrap_angle(0.5 * phi0 + ac);
  if (t0 > t1) std::swap(t0, t1);
  return {t0, t1};
}

PauliDecomp pauli_log(const Mat2& m, double unitary_tol) {
  auto th = eig_phases2(m, unitary_tol);
  PauliDecomp d;
  double tp = th[1], tm = th[0];
  d.h0 = 0.5 * (tp + tm);
  double r = 0.5 * (tp - tm);
  if (r < 0.5 * kDegenerateTol) {
    d.h = {0.0, 0.0, 0.0};
    return d;
  }
  // direction: sin(r) n = Im-part of sigma-projection of M e^{-i h0}
  Cx ph = std::polar(1.0, -d.h0);
  Cx w1 = (m(0, 1) + m(1, 0)) * ph / Cx(0.0, 2.0);
  Cx w2 = (Cx(0.0, -1.0) * m(0, 1) + Cx(0.0, 1.0) * m(1, 0)) * ph / Cx(0.0, 2.0);
  Cx w3 = (m(0, 0) - m(1, 1)) * ph / Cx(0.0, 2.0);
  std::array<double, 3> w = {std::real(w1), std::real(w2), std::real(w3)};
  double nw = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
  if (nw < 1e-14) {
    d.h = {0.0, 0.0, 0.0};
    return d;
  }
  for (auto& x : w) x *= r / nw;
  d.h = w;
  return d;
}

PauliDecomp pauli_log_near(const Mat2& m, const PauliDecomp& ref, double unitary_tol) {
  PauliDecomp p = pauli_log(m, unitary_tol);
  double r = std::sqrt(p.h[0] * p.h[0] + p.h[1] * p.h[1] + p.h[2] * p.h[2]);
  auto dist = [&](const PauliDecomp& c) {
    double dh = 0.0;
    for (int i = 0; i < 3; ++i) dh += (c.h[static_cast<size_t>(i)] - ref.h[static_cast<size_t>(i)]) *
                                      (c.h[static_cast<size_t>(i)] - ref.h[static_cast<size_t>(i)]);
    double d0 = c.h0 - ref.h0;
    return d0 * d0 + dh;
  };
  // candidate sheets: principal; h0 +- 2pi; swapped branch (h0 +- pi, h -> (pi - r)(-n))
  std::vector<PauliDecomp> cands;
  for (int a = -1; a <= 1; ++a) {
    PauliDecomp c = p;
    c.h0 += kTwoPi * a;
    cands.push_back(c);
  }
  if (r > 1e-12) {
    std::array<double, 3> flip{};
    for (size_t i = 0; i < 3; ++i) flip[i] = -(kPi - r) * p.h[i] / r;
    for (int a = -1; a <= 1; ++a) {
      PauliDecomp c;
      c.h0 = p.h0 + kPi + kTwoPi * a;
      c.h = flip;
      cands.push_back(c);
      PauliDecomp c2;
      c2.h0 = p.h0 - kPi + kTwoPi * a;
      c2.h = flip;
      cands.push_back(c2);
    }
  }
  PauliDecomp best = cands[0];
  for (const auto& c : cands)
    if (dist(c) < dist(best)) best = c;
  return best;
}

Mat2 pauli_exp(const PauliDecomp& d) {
  double r = std::sqrt(d.h[0] * d.h[0] + d.h[1] * d.h[1] + d.h[2] * d.h[2]);
  Cx ph = std::polar(1.0, d.h0);
  Mat2 m;
  if (r < 1e-300) {
    m(0, 0) = m(1, 1) = ph;
    return m;
  }
  double cr = std::cos(r), sr = std::sin(r);
  std::array<double, 3> n = {d.h[0] / r, d.h[1] / r, d.h[2] / r};
  m(0, 0) = ph * Cx(cr, sr * n[2]);
  m(1, 1) = ph * Cx(cr, -sr * n[2]);
  m(0, 1) = ph * (Cx(0.0, 1.0) * sr * Cx(n[0], -n[1]));
  m(1, 0) = ph * (Cx(0.0, 1.0) * sr * Cx(n[0], n[1]));
  return m;
}

}  // namespace qgraph
