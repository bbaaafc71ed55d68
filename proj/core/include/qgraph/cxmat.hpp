#pragma once

// Small complex linear algebra for 2x2 and 4x4 matrices: products, adjoints,
// determinants, unitarity checks, eigendecomposition of unitary matrices, and
// the Pauli (h0, h) decomposition of 2x2 unitaries.
//
// The eigensolver targets unitary input only. Eigenphases are roots of the
// characteristic quartic; because the quartic of a unitary matrix is
// self-inversive, the roots are located as zeros of a real trigonometric
// polynomial on the unit circle (Ferrari seeds + Newton polish), which stays
// accurate through near-degeneracies. Eigenvectors come from spectral
// projectors built as polynomial products.

#include <array>
#include <complex>

namespace qgraph {

using Cx = std::complex<double>;
using Vec2 = std::array<Cx, 2>;
using Vec4 = std::array<Cx, 4>;

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kTwoPi = 2.0 * kPi;

// Wrap to (-pi, pi].
double wrap_angle(double x);
// Wrap to [0, 2pi).
double wrap_2pi(double x);
// Wrap to [0, pi).
double wrap_pi(double x);

struct Mat2 {
  std::array<Cx, 4> e{};  // row-major

  Cx& operator()(int r, int c) { return e[static_cast<size_t>(2 * r + c)]; }
  const Cx& operator()(int r, int c) const { return e[static_cast<size_t>(2 * r + c)]; }

  static Mat2 identity();
  static Mat2 zero();
};

struct Mat4 {
  std::array<Cx, 16> e{};  // row-major

  Cx& operator()(int r, int c) { return e[static_cast<size_t>(4 * r + c)]; }
  const Cx& operator()(int r, int c) const { return e[static_cast<size_t>(4 * r + c)]; }

  static Mat4 identity();
  static Mat4 zero();
};

Mat2 operator*(const Mat2& a, const Mat2& b);
Mat4 operator*(const Mat4& a, const Mat4& b);
Mat2 operator*(Cx s, const Mat2& m);
Mat4 operator*(Cx s, const Mat4& m);
Mat2 operator-(const Mat2& a, const Mat2& b);
Mat4 operator-(const Mat4& a, const Mat4& b);
Mat2 operator+(const Mat2& a, const Mat2& b);
Mat4 operator+(const Mat4& a, const Mat4& b);
Vec4 operator*(const Mat4& m, const Vec4& v);
Vec2 operator*(const Mat2& m, const Vec2& v);

Mat2 adjoint(const Mat2& m);
Mat4 adjoint(const Mat4& m);

Cx det(const Mat2& m);
Cx det(const Mat4& m);

double max_abs(const Mat2& m);
double max_abs(const Mat4& m);

// Deviation from unitarity: max entry of M M^dag - I.
double unitarity_defect(const Mat2& m);
double unitarity_defect(const Mat4& m);

bool is_unitary(const Mat2& m, double tol = 1e-10);
bool is_unitary(const Mat4& m, double tol = 1e-10);

// Throws NonUnitaryError when the defect exceeds tol.
void assert_unitary(const Mat2& m, double tol = 1e-10);
void assert_unitary(const Mat4& m, double tol = 1e-10);

Cx dot(const Vec4& a, const Vec4& b);  // conjugate-linear in the first slot
Cx dot(const Vec2& a, const Vec2& b);
double norm(const Vec4& v);

// Eigenphases closer than this are treated as a degenerate cluster when
// building eigenvectors.
constexpr double kDegenerateTol = 1e-8;

struct EigenSystem {
  std::array<double, 4> phases{};  // theta_j in (-pi, pi], ascending
  std::array<Vec4, 4> vectors{};   // orthonormal; M v_j = e^{i theta_j} v_j
};

/// Eigenphases of a 4x4 unitary, ascending in (-pi, pi]. No eigenvectors.
std::array<double, 4> eig_phases(const Mat4& m, double unitary_tol = 1e-9);

/// Full eigensystem of a 4x4 unitary. Degenerate phases get an orthonormal
/// basis of the degenerate subspace.
EigenSystem eig_unitary(const Mat4& m, double unitary_tol = 1e-9);

// 2x2 unitary eigenphases in closed form, ascending in (-pi, pi].
std::array<double, 2> eig_phases2(const Mat2& m, double unitary_tol = 1e-9);

struct PauliDecomp {
  double h0 = 0.0;
  std::array<double, 3> h{};  // |h| in [0, pi)
};

/// (h0, h) with exp(i(h0 I + sigma.h)) = m. Principal branch: eigenphases in
/// (-pi, pi], theta+ >= theta-, h0 = (theta+ + theta-)/2, |h| = (theta+ - theta-)/2.
PauliDecomp pauli_log(const Mat2& m, double unitary_tol = 1e-9);

/// Same decomposition, but on the 2pi/branch sheet nearest to `ref`. Keeps
/// finite-difference stencils smooth across the principal-branch cut.
PauliDecomp pauli_log_near(const Mat2& m, const PauliDecomp& ref, double unitary_tol = 1e-9);

/// exp(i(h0 I + sigma.h)).
Mat2 pauli_exp(const PauliDecomp& d);

}  // namespace qgraph
