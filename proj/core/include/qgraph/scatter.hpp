#pragma once

// Vertex scattering matrices of the square-lattice / figure-eight quantum
// graph, parametrized by the ten topologically relevant angles of the
// two-block polar decomposition
//
//   S0 = diag(U1, U2) [[D, Db], [-Db, D]] diag(V1, V2),
//   D = diag(cos a, cos b), Db = diag(sin a, sin b),
//   U_i = R(theta_i) diag(e^{i nu_i}, e^{-i nu_i}),
//   V_1 = diag(e^{+i mu_1}, e^{-i mu_1}) R(eta_1),
//   V_2 = diag(e^{-i mu_2}, e^{+i mu_2}) R(eta_2),
//
// with the redundant phases fixed to zero. The scattering phase gamma enters
// as the one-parameter family S = diag(e^{i gamma} I, e^{-i gamma} I) S0.

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "qgraph/cxmat.hpp"

namespace qgraph {

struct ScatterParams {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double theta1 = 0.0;
  double theta2 = 0.0;
  double eta1 = 0.0;
  double eta2 = 0.0;
  double nu1 = 0.0;
  double nu2 = 0.0;
  double mu1 = 0.0;
  double mu2 = 0.0;

  double get(std::string_view name) const;
  void set(std::string_view name, double value);
  static const std::vector<std::string>& names();
  static bool is_param(std::string_view name);
};

struct SBlocks {
  Mat2 s11, s12, s21, s22;
};

/// The gamma = 0 representative S0. Unitary within 1e-12 for finite params.
Mat4 build_s0(const ScatterParams& p);

/// diag(e^{i gamma} I2, e^{-i gamma} I2) * s0.
Mat4 apply_gamma(const Mat4& s0, double gamma);

/// Full scatterer: apply_gamma(build_s0(p), p.gamma).
Mat4 build_s(const ScatterParams& p);

/// The four contiguous 2x2 blocks of a 4x4 matrix.
SBlocks blocks(const Mat4& s);
Mat4 from_blocks(const SBlocks& b);

/// gamma = (arg det S11 - arg det S22)/4 of the block decomposition.
double gamma_of(const Mat4& s);

// Flat key-value parameter file: one `name = value` per line, '#' comments.
// Unknown keys are rejected. Keys outside ScatterParams are returned in
// `extra` when a pointer is given (used by the scan config parser).
ScatterParams parse_params_text(const std::string& text,
                                std::vector<std::pair<std::string, std::string>>* extra = nullptr);
ScatterParams load_params_file(const std::string& path,
                               std::vector<std::pair<std::string, std::string>>* extra = nullptr);

}  // namespace qgraph
