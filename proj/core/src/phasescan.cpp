#include "qgraph/phasescan.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "qgraph/degeneracy.hpp"
#include "qgraph/errors.hpp"

namespace qgraph {

using nlohmann::json;

void ScanSpec::validate() const {
  for (const ScanAxis* ax : {&axis1, &axis2}) {
    if (!ScatterParams::is_param(ax->param))
      throw ValidationError("scan axis parameter `" + ax->param + "` is not a scatterer parameter");
    if (!(ax->min < ax->max) || !std::isfinite(ax->min) || !std::isfinite(ax->max))
      throw ValidationError("scan axis range must be finite with min < max");
    if (ax->count < 2) throw ValidationError("scan axis sample count must be >= 2");
  }
  if (axis1.param == axis2.param) throw ValidationError("scan axes must use distinct parameters");
  if (grid_n < 8) throw ValidationError("scan grid_n must be >= 8");
  if (band_index < 0 || band_index > 4) throw ValidationError("band index must be 1..4 or 0 for all");
}

double ScanSpec::axis1_value(int i) const {
  return axis1.min + (axis1.max - axis1.min) * i / (axis1.count - 1);
}
double ScanSpec::axis2_value(int j) const {
  return axis2.min + (axis2.max - axis2.min) * j / (axis2.count - 1);
}

ScatterParams ScanSpec::params_at(int i, int j) const {
  ScatterParams p = base;
  p.set(axis1.param, axis1_value(i));
  p.set(axis2.param, axis2_value(j));
  return p;
}

const Cell& PhaseGrid::at(int i, int j) const {
  return cells[static_cast<size_t>(j) * static_cast<size_t>(spec.axis1.count) + static_cast<size_t>(i)];
}

bool PhaseGrid::operator==(const PhaseGrid& o) const {
  auto ax_eq = [](const ScanAxis& a, const ScanAxis& b) {
    return a.param == b.param && a.min == b.min && a.max == b.max && a.count == b.count;
  };
  if (!ax_eq(spec.axis1, o.spec.axis1) || !ax_eq(spec.axis2, o.spec.axis2)) return false;
  if (spec.grid_n != o.spec.grid_n || spec.band_index != o.spec.band_index) return false;
  for (const auto& name : ScatterParams::names())
    if (spec.base.get(name) != o.spec.base.get(name)) return false;
  if (cells.size() != o.cells.size() || boundary_curves.size() != o.boundary_curves.size()) return false;
  for (size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].status != o.cells[i].status) return false;
    if (cells[i].chern.c != o.cells[i].chern.c) return false;
    if (cells[i].chern.converged != o.cells[i].chern.converged) return false;
    if (cells[i].chern.grid_n != o.cells[i].chern.grid_n) return false;
  }
  for (size_t i = 0; i < boundary_curves.size(); ++i) {
    if (boundary_curves[i].sign != o.boundary_curves[i].sign) return false;
    if (boundary_curves[i].branch != o.boundary_curves[i].branch) return false;
    if (boundary_curves[i].points != o.boundary_curves[i].points) return false;
  }
  return true;
}

int resolve_jobs(int jobs) {
  if (jobs > 0) return jobs;
  if (const char* env = std::getenv("PHASESCAN_JOBS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

void parallel_for_indexed(int n, int jobs, const std::function<void(int)>& fn) {
  jobs = std::min(std::max(1, jobs), std::max(1, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(jobs));
  for (int t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  for (auto& th : pool) th.join();
}

// --------------------------------------------------------------------------
// Boundary curve tracing
// --------------------------------------------------------------------------

namespace {

double mod_pi_signed(double x) {
  double y = std::fmod(x, kPi);
  if (y > kPi / 2.0) y -= kPi;
  if (y <= -kPi / 2.0) y += kPi;
  return y;
}

struct CurvePoint {
  double x, y;
  int branch;
  int sign;
};

// gamma crossing set (with branch ids and signs) for the base with axis values
// substituted; empty on any solver failure
struct GammaSet {
  bool ok = false;
  std::vector<CrossingSolution> sols;
};

GammaSet gamma_set_at(const ScanSpec& spec, double v1, double v2) {
  GammaSet g;
  ScatterParams p = spec.base;
  p.set(spec.axis1.param, v1);
  p.set(spec.axis2.param, v2);
  p.gamma = 0.0;
  try {
    Mat4 s0 = build_s0(p);
    g.sols = gamma_crossings(s0);
    g.ok = true;
  } catch (const Error&) {
    g.ok = false;
  }
  return g;
}

int sign_along_axis2(const ScanSpec& spec, double v1, double v2, const CrossingSolution& sol) {
  ScatterParams p = spec.base;
  p.set(spec.axis1.param, v1);
  if (spec.axis2.param != "gamma") p.set(spec.axis2.param, v2);
  p.gamma = 0.0;
  try {
    return transition_sign_along(sol, p, spec.axis2.param);
  } catch (const Error&) {
    return 0;
  }
}

// axis2 == gamma: curves are graphs y = gamma_b(x) + m pi
std::vector<CurvePoint> trace_gamma_axis(const ScanSpec& spec) {
  std::vector<CurvePoint> pts;
  int nx = std::max(4 * spec.axis1.count, 64);
  for (int ix = 0; ix <= nx; ++ix) {
    double x = spec.axis1.min + (spec.axis1.max - spec.axis1.min) * ix / nx;
    ScatterParams p = spec.base;
    p.set(spec.axis1.param, x);
    p.gamma = 0.0;
    std::vector<CrossingSolution> sols;
    try {
      sols = gamma_crossings(build_s0(p));
    } catch (const Error&) {
      continue;
    }
    for (const auto& s : sols) {
      // lift gamma (mod pi) into the y range
      double base = s.gamma + kPi * std::floor((spec.axis2.min - s.gamma) / kPi);
      for (double y = base; y <= spec.axis2.max + 1e-12; y += kPi) {
        if (y + 1e-12 < spec.axis2.min) continue;
        pts.push_back(CurvePoint{x, y, s.branch, s.sign});
      }
    }
  }
  return pts;
}

// gamma fixed: contour gamma_b(x, y) == base.gamma (mod pi) over the plane
std::vector<CurvePoint> trace_fixed_gamma(const ScanSpec& spec) {
  std::vector<CurvePoint> pts;
  double gfix = spec.base.gamma;
  int nx = std::max(4 * spec.axis1.count, 64);
  int ny = std::max(4 * spec.axis2.count, 64);

  auto nearest = [&](double v1, double v2, int* branch) -> double {
    GammaSet g = gamma_set_at(spec, v1, v2);
    if (!g.ok || g.sols.empty()) return std::numeric_limits<double>::quiet_NaN();
    double best = std::numeric_limits<double>::quiet_NaN();
    double bestd = 1e9;
    for (const auto& s : g.sols) {
      double d = mod_pi_signed(gfix - s.gamma);
      if (std::abs(d) < bestd) {
        bestd = std::abs(d);
        best = d;
        if (branch) *branch = s.branch;
      }
    }
    return best;  // signed distance to the nearest crossing gamma
  };

  for (int ix = 0; ix <= nx; ++ix) {
    double x = spec.axis1.min + (spec.axis1.max - spec.axis1.min) * ix / nx;
    double prev_y = 0.0, prev_d = std::numeric_limits<double>::quiet_NaN();
    for (int iy = 0; iy <= ny; ++iy) {
      double y = spec.axis2.min + (spec.axis2.max - spec.axis2.min) * iy / ny;
      int branch = -1;
      double d = nearest(x, y, &branch);
      if (!std::isnan(prev_d) && !std::isnan(d) && prev_d * d < 0 && std::abs(prev_d) < kPi / 4 &&
          std::abs(d) < kPi / 4) {
        double lo = prev_y, hi = y, flo = prev_d;
        for (int b = 0; b < 60; ++b) {
          double mid = 0.5 * (lo + hi);
          double fm = nearest(x, mid, nullptr);
          if (std::isnan(fm)) break;
          if (flo * fm <= 0)
            hi = mid;
          else {
            lo = mid;
            flo = fm;
          }
        }
        double yr = 0.5 * (lo + hi);
        double dr = nearest(x, yr, &branch);
        if (!std::isnan(dr) && std::abs(dr) < 1e-6) {
          // identified: fetch the matching solution for the sign
          GammaSet g = gamma_set_at(spec, x, yr);
          int sgn = 0, br = -1;
          double bd = 1e9;
          for (const auto& s : g.sols) {
            double dd = std::abs(mod_pi_signed(gfix - s.gamma));
            if (dd < bd) {
              bd = dd;
              br = s.branch;
              CrossingSolution adj = s;
              adj.gamma = gfix;  // evaluate the sign at the plane's gamma
              sgn = sign_along_axis2(spec, x, yr, adj);
            }
          }
          pts.push_back(CurvePoint{x, yr, br, sgn});
        }
      }
      prev_y = y;
      prev_d = d;
    }
  }
  return pts;
}

std::vector<BoundaryCurve> chain_points(std::vector<CurvePoint> pts, double x_step, double y_span) {
  // greedy chaining between consecutive x columns
  std::vector<BoundaryCurve> curves;
  if (pts.empty()) return curves;
  std::sort(pts.begin(), pts.end(), [](const CurvePoint& a, const CurvePoint& b) {
    if (a.x != b.x) return a.x < b.x;
    return a.y < b.y;
  });
  double jump = std::max(y_span / 8.0, 1e-9);
  struct Open {
    BoundaryCurve curve;
    double last_x, last_y;
    bool extended = false;
  };
  std::vector<Open> open;
  size_t i = 0;
  while (i < pts.size()) {
    double x = pts[i].x;
    size_t j = i;
    while (j < pts.size() && pts[j].x == x) ++j;
    for (auto& o : open) o.extended = false;
    for (size_t t = i; t < j; ++t) {
      const CurvePoint& cp = pts[t];
      Open* best = nullptr;
      double bestd = jump;
      for (auto& o : open) {
        if (o.extended) continue;
        if (o.curve.sign != cp.sign || o.curve.branch != cp.branch) continue;
        if (x - o.last_x > 2.5 * x_step) continue;
        double dy = std::abs(cp.y - o.last_y);
        if (dy < bestd) {
          bestd = dy;
          best = &o;
        }
      }
      if (best) {
        best->curve.points.push_back({cp.x, cp.y});
        best->last_x = cp.x;
        best->last_y = cp.y;
        best->extended = true;
      } else {
        Open o;
        o.curve.sign = cp.sign;
        o.curve.branch = cp.branch;
        o.curve.points.push_back({cp.x, cp.y});
        o.last_x = cp.x;
        o.last_y = cp.y;
        o.extended = true;
        open.push_back(std::move(o));
      }
    }
    i = j;
  }
  for (auto& o : open)
    if (o.curve.points.size() >= 2) curves.push_back(std::move(o.curve));
  return curves;
}

}  // namespace

PhaseGrid run_scan(const ScanSpec& spec, int jobs) {
  spec.validate();
  PhaseGrid grid;
  grid.spec = spec;
  int n1 = spec.axis1.count, n2 = spec.axis2.count;
  grid.cells.assign(static_cast<size_t>(n1) * static_cast<size_t>(n2), Cell{});

  int J = resolve_jobs(jobs);
  parallel_for_indexed(n1 * n2, J, [&](int idx) {
    int i = idx % n1;
    int j = idx / n1;
    Cell& cell = grid.cells[static_cast<size_t>(idx)];
    try {
      Mat4 s = build_s(spec.params_at(i, j));
      cell.chern = chern_fhs(s, spec.grid_n);
      cell.status = cell.chern.converged ? CellStatus::ok : CellStatus::boundary;
    } catch (const GapClosureError&) {
      cell.status = CellStatus::boundary;
      cell.chern.grid_n = spec.grid_n;
    } catch (const Error&) {
      cell.status = CellStatus::undetermined;
      cell.chern.grid_n = spec.grid_n;
    }
  });
  for (const auto& c : grid.cells) {
    if (c.status == CellStatus::boundary) ++grid.boundary_count;
    if (c.status == CellStatus::undetermined) ++grid.undetermined_count;
  }

  // analytic boundary overlay
  std::vector<CurvePoint> pts;
  if (spec.axis2.param == "gamma") {
    pts = trace_gamma_axis(spec);
  } else if (spec.axis1.param == "gamma") {
    // mirror: trace with the axes swapped, then flip coordinates
    ScanSpec sw = spec;
    sw.axis1 = spec.axis2;
    sw.axis2 = spec.axis1;
    auto mirrored = trace_gamma_axis(sw);
    for (auto& p : mirrored) std::swap(p.x, p.y);
    // x-sorted chaining still applies after the swap
    pts = std::move(mirrored);
  } else {
    pts = trace_fixed_gamma(spec);
  }
  double x_step = (spec.axis1.max - spec.axis1.min) / std::max(4 * spec.axis1.count, 64);
  grid.boundary_curves = chain_points(std::move(pts), x_step, spec.axis2.max - spec.axis2.min);
  return grid;
}

// --------------------------------------------------------------------------
// Emission
// --------------------------------------------------------------------------

namespace {

std::string fmt12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

const char* status_name(CellStatus s) {
  switch (s) {
    case CellStatus::ok:
      return "ok";
    case CellStatus::boundary:
      return "boundary";
    default:
      return "undetermined";
  }
}

CellStatus status_from(const std::string& s) {
  if (s == "ok") return CellStatus::ok;
  if (s == "boundary") return CellStatus::boundary;
  if (s == "undetermined") return CellStatus::undetermined;
  throw ValidationError("unknown cell status: " + s);
}

}  // namespace

std::string emit_csv(const PhaseGrid& grid) {
  std::ostringstream out;
  out << grid.spec.axis1.param << "," << grid.spec.axis2.param << ",c1,c2,c3,c4,converged\n";
  int n1 = grid.spec.axis1.count, n2 = grid.spec.axis2.count;
  for (int j = 0; j < n2; ++j)
    for (int i = 0; i < n1; ++i) {
      const Cell& c = grid.at(i, j);
      out << fmt12(grid.spec.axis1_value(i)) << "," << fmt12(grid.spec.axis2_value(j)) << ",";
      if (c.status == CellStatus::ok || (c.status == CellStatus::boundary && c.chern.grid_n > 0)) {
        out << c.chern.c[0] << "," << c.chern.c[1] << "," << c.chern.c[2] << "," << c.chern.c[3];
      } else {
        out << "nan,nan,nan,nan";
      }
      out << "," << (c.chern.converged ? 1 : 0) << "\n";
    }
  return out.str();
}

std::string emit_json(const PhaseGrid& grid) {
  json j;
  json base;
  for (const auto& name : ScatterParams::names()) base[name] = grid.spec.base.get(name);
  j["spec"] = {
      {"base", base},
      {"axis1", {{"param", grid.spec.axis1.param}, {"min", grid.spec.axis1.min}, {"max", grid.spec.axis1.max}, {"count", grid.spec.axis1.count}}},
      {"axis2", {{"param", grid.spec.axis2.param}, {"min", grid.spec.axis2.min}, {"max", grid.spec.axis2.max}, {"count", grid.spec.axis2.count}}},
      {"grid_n", grid.spec.grid_n},
      {"band", grid.spec.band_index},
  };
  json cells = json::array();
  for (const auto& c : grid.cells) {
    cells.push_back({{"c", c.chern.c},
                     {"grid_n", c.chern.grid_n},
                     {"converged", c.chern.converged},
                     {"status", status_name(c.status)}});
  }
  j["cells"] = std::move(cells);
  json curves = json::array();
  for (const auto& bc : grid.boundary_curves) {
    json pj = json::array();
    for (const auto& p : bc.points) pj.push_back({p[0], p[1]});
    curves.push_back({{"sign", bc.sign}, {"branch", bc.branch}, {"points", std::move(pj)}});
  }
  j["boundary_curves"] = std::move(curves);
  j["summary"] = {{"boundary_cells", grid.boundary_count}, {"undetermined_cells", grid.undetermined_count}};
  return j.dump(2) + "\n";
}

PhaseGrid parse_json_grid(const std::string& text) {
  json j = json::parse(text);
  PhaseGrid g;
  const json& sp = j.at("spec");
  for (const auto& name : ScatterParams::names()) g.spec.base.set(name, sp.at("base").at(name).get<double>());
  auto read_axis = [](const json& a) {
    ScanAxis ax;
    ax.param = a.at("param").get<std::string>();
    ax.min = a.at("min").get<double>();
    ax.max = a.at("max").get<double>();
    ax.count = a.at("count").get<int>();
    return ax;
  };
  g.spec.axis1 = read_axis(sp.at("axis1"));
  g.spec.axis2 = read_axis(sp.at("axis2"));
  g.spec.grid_n = sp.at("grid_n").get<int>();
  g.spec.band_index = sp.at("band").get<int>();
  for (const auto& cj : j.at("cells")) {
    Cell c;
    auto arr = cj.at("c");
    for (size_t b = 0; b < 4; ++b) c.chern.c[b] = arr.at(b).get<int>();
    c.chern.grid_n = cj.at("grid_n").get<int>();
    c.chern.converged = cj.at("converged").get<bool>();
    c.status = status_from(cj.at("status").get<std::string>());
    g.cells.push_back(c);
  }
  for (const auto& bj : j.at("boundary_curves")) {
    BoundaryCurve bc;
    bc.sign = bj.at("sign").get<int>();
    bc.branch = bj.at("branch").get<int>();
    for (const auto& pj : bj.at("points")) bc.points.push_back({pj.at(0).get<double>(), pj.at(1).get<double>()});
    g.boundary_curves.push_back(std::move(bc));
  }
  g.boundary_count = j.at("summary").at("boundary_cells").get<int>();
  g.undetermined_count = j.at("summary").at("undetermined_cells").get<int>();
  return g;
}

namespace {

struct Rgb {
  int r, g, b;
};

Rgb cell_color(const Cell& c, int band) {
  if (c.status == CellStatus::undetermined || c.status == CellStatus::boundary) return {176, 176, 176};
  int v = c.chern.c[static_cast<size_t>(band)];
  if (v > 0) return {255, 160, 160};
  if (v < 0) return {160, 160, 255};
  return {255, 255, 255};
}

}  // namespace

std::string emit_ppm(const PhaseGrid& grid) {
  int n1 = grid.spec.axis1.count, n2 = grid.spec.axis2.count;
  int band = grid.spec.band_index > 0 ? grid.spec.band_index - 1 : 0;
  std::vector<Rgb> pix(static_cast<size_t>(n1) * static_cast<size_t>(n2));
  for (int j = 0; j < n2; ++j)
    for (int i = 0; i < n1; ++i) {
      // image row 0 at the top = largest axis2 value
      int row = n2 - 1 - j;
      pix[static_cast<size_t>(row * n1 + i)] = cell_color(grid.at(i, j), band);
    }
  // overlay curves
  auto to_px = [&](double x, double y, int& pi, int& pj) {
    double fx = (x - grid.spec.axis1.min) / (grid.spec.axis1.max - grid.spec.axis1.min);
    double fy = (y - grid.spec.axis2.min) / (grid.spec.axis2.max - grid.spec.axis2.min);
    pi = static_cast<int>(std::lround(fx * (n1 - 1)));
    pj = n2 - 1 - static_cast<int>(std::lround(fy * (n2 - 1)));
    return pi >= 0 && pi < n1 && pj >= 0 && pj < n2;
  };
  for (const auto& bc : grid.boundary_curves) {
    Rgb col = bc.sign >= 0 ? Rgb{220, 0, 0} : Rgb{0, 0, 220};
    for (size_t t = 0; t + 1 < bc.points.size(); ++t) {
      // parametric stepping along the segment
      double x0 = bc.points[t][0], y0 = bc.points[t][1];
      double x1 = bc.points[t + 1][0], y1 = bc.points[t + 1][1];
      int steps = 1 + static_cast<int>(std::abs(x1 - x0) / ((grid.spec.axis1.max - grid.spec.axis1.min) / n1) +
                                       std::abs(y1 - y0) / ((grid.spec.axis2.max - grid.spec.axis2.min) / n2));
      for (int u = 0; u <= steps; ++u) {
        double x = x0 + (x1 - x0) * u / steps;
        double y = y0 + (y1 - y0) * u / steps;
        int pi, pj;
        if (to_px(x, y, pi, pj)) pix[static_cast<size_t>(pj * n1 + pi)] = col;
      }
    }
  }
  std::ostringstream out;
  out << "P3\n" << n1 << " " << n2 << "\n255\n";
  for (int j = 0; j < n2; ++j) {
    for (int i = 0; i < n1; ++i) {
      const Rgb& c = pix[static_cast<size_t>(j * n1 + i)];
      out << c.r << " " << c.g << " " << c.b << (i + 1 < n1 ? " " : "");
    }
    out << "\n";
  }
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << content;
  if (!f) throw IoError("write failed: " + path);
}

ScanSpec parse_scan_config(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> extra;
  ScanSpec spec;
  spec.base = parse_params_text(text, &extra);
  bool have1 = false, have2 = false;
  for (const auto& [key, val] : extra) {
    auto bad = [&]() { return ValidationError("bad value for " + key + ": " + val); };
    auto as_num = [&](const std::string& v) {
      try {
        size_t used = 0;
        double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
      } catch (const std::exception&) {
        throw bad();
      }
    };
    if (key == "scan.axis1") {
      spec.axis1.param = val;
      have1 = true;
    } else if (key == "scan.axis2") {
      spec.axis2.param = val;
      have2 = true;
    } else if (key == "scan.axis1.min")
      spec.axis1.min = as_num(val);
    else if (key == "scan.axis1.max")
      spec.axis1.max = as_num(val);
    else if (key == "scan.axis1.count")
      spec.axis1.count = static_cast<int>(as_num(val));
    else if (key == "scan.axis2.min")
      spec.axis2.min = as_num(val);
    else if (key == "scan.axis2.max")
      spec.axis2.max = as_num(val);
    else if (key == "scan.axis2.count")
      spec.axis2.count = static_cast<int>(as_num(val));
    else if (key == "scan.grid_n")
      spec.grid_n = static_cast<int>(as_num(val));
    else if (key == "scan.band") {
      if (val == "all")
        spec.band_index = 0;
      else
        spec.band_index = static_cast<int>(as_num(val));
    } else
      throw ValidationError("unknown key `" + key + "` in scan config");
  }
  if (!have1 || !have2) throw ValidationError("scan config must set scan.axis1 and scan.axis2");
  spec.validate();
  return spec;
}

ScanSpec load_scan_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open scan config: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_scan_config(ss.str());
}

}  // namespace qgraph
