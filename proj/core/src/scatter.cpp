#include "qgraph/scatter.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "qgraph/errors.hpp"

namespace qgraph {

namespace {

Mat2 rot(double t) {
  Mat2 m;
  m(0, 0) = std::cos(t);
  m(0, 1) = std::sin(t);
  m(1, 0) = -std::sin(t);
  m(1, 1) = std::cos(t);
  return m;
}

Mat2 dphase(double x) {
  Mat2 m;
  m(0, 0) = std::polar(1.0, x);
  m(1, 1) = std::polar(1.0, -x);
  return m;
}

Mat4 block_diag(const Mat2& a, const Mat2& b) {
  Mat4 m;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      m(i, j) = a(i, j);
      m(i + 2, j + 2) = b(i, j);
    }
  return m;
}

}  // namespace

double ScatterParams::get(std::string_view name) const {
  if (name == "alpha") return alpha;
  if (name == "beta") return beta;
  if (name == "gamma") return gamma;
  if (name == "theta1") return theta1;
  if (name == "theta2") return theta2;
  if (name == "eta1") return eta1;
  if (name == "eta2") return eta2;
  if (name == "nu1") return nu1;
  if (name == "nu2") return nu2;
  if (name == "mu1") return mu1;
  if (name == "mu2") return mu2;
  throw ValidationError("unknown scatterer parameter: " + std::string(name));
}

void ScatterParams::set(std::string_view name, double value) {
  if (name == "alpha")
    alpha = value;
  else if (name == "beta")
    beta = value;
  else if (name == "gamma")
    gamma = value;
  else if (name == "theta1")
    theta1 = value;
  else if (name == "theta2")
    theta2 = value;
  else if (name == "eta1")
    eta1 = value;
  else if (name == "eta2")
    eta2 = value;
  else if (name == "nu1")
    nu1 = value;
  else if (name == "nu2")
    nu2 = value;
  else if (name == "mu1")
    mu1 = value;
  else if (name == "mu2")
    mu2 = value;
  else
    throw ValidationError("unknown scatterer parameter: " + std::string(name));
}

const std::vector<std::string>& ScatterParams::names() {
  static const std::vector<std::string> n = {"alpha", "beta",  "gamma", "theta1", "theta2", "eta1",
                                             "eta2",  "nu1",   "nu2",   "mu1",    "mu2"};
  return n;
}

bool ScatterParams::is_param(std::string_view name) {
  for (const auto& n : names())
    if (n == name) return true;
  return false;
}

Mat4 build_s0(const ScatterParams& p) {
  Mat2 D, Db;
  D(0, 0) = std::cos(p.alpha);
  D(1, 1) = std::cos(p.beta);
  Db(0, 0) = std::sin(p.alpha);
  Db(1, 1) = std::sin(p.beta);

  Mat2 u1 = rot(p.theta1) * dphase(p.nu1);
  Mat2 u2 = rot(p.theta2) * dphase(p.nu2);
  Mat2 v1 = dphase(p.mu1) * rot(p.eta1);    // upper sign, i = 1
  Mat2 v2 = dphase(-p.mu2) * rot(p.eta2);   // lower sign, i = 2

  Mat4 mid;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      mid(i, j) = D(i, j);
      mid(i, j + 2) = Db(i, j);
      mid(i + 2, j) = -Db(i, j);
      mid(i + 2, j + 2) = D(i, j);
    }
  return block_diag(u1, u2) * mid * block_diag(v1, v2);
}

Mat4 apply_gamma(const Mat4& s0, double gamma) {
  Mat4 r = s0;
  Cx up = std::polar(1.0, gamma), dn = std::polar(1.0, -gamma);
  for (int j = 0; j < 4; ++j) {
    r(0, j) *= up;
    r(1, j) *= up;
    r(2, j) *= dn;
    r(3, j) *= dn;
  }
  return r;
}

Mat4 build_s(const ScatterParams& p) { return apply_gamma(build_s0(p), p.gamma); }

SBlocks blocks(const Mat4& s) {
  SBlocks b;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      b.s11(i, j) = s(i, j);
      b.s12(i, j) = s(i, j + 2);
      b.s21(i, j) = s(i + 2, j);
      b.s22(i, j) = s(i + 2, j + 2);
    }
  return b;
}

Mat4 from_blocks(const SBlocks& b) {
  Mat4 s;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      s(i, j) = b.s11(i, j);
      s(i, j + 2) = b.s12(i, j);
      s(i + 2, j) = b.s21(i, j);
      s(i + 2, j + 2) = b.s22(i, j);
    }
  return s;
}

double gamma_of(const Mat4& s) {
  SBlocks b = blocks(s);
  return 0.25 * (std::arg(det(b.s11)) - std::arg(det(b.s22)));
}

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

ScatterParams parse_params_text(const std::string& text,
                                std::vector<std::pair<std::string, std::string>>* extra) {
  ScatterParams p;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("parameter file line " + std::to_string(lineno) + ": expected `key = value`");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (ScatterParams::is_param(key)) {
      try {
        size_t used = 0;
        double x = std::stod(val, &used);
        if (used != val.size()) throw std::invalid_argument(val);
        p.set(key, x);
      } catch (const std::exception&) {
        throw ValidationError("parameter file line " + std::to_string(lineno) + ": bad value for " + key);
      }
    } else if (extra != nullptr) {
      extra->emplace_back(key, val);
    } else {
      throw ValidationError("parameter file line " + std::to_string(lineno) + ": unknown key `" + key + "`");
    }
  }
  return p;
}

ScatterParams load_params_file(const std::string& path,
                               std::vector<std::pair<std::string, std::string>>* extra) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open parameter file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_params_text(ss.str(), extra);
}

}  // namespace qgraph
