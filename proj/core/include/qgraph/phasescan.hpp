#pragma once

// Parameter-plane sweeps producing Chern phase diagrams: per-cell FHS Chern
// vectors on a 2-D grid over two scatterer parameters, analytic boundary
// curves overlaid from the closed-form crossing solver, and CSV/JSON/PPM
// output. Cells are independent work units; assembly is deterministic.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qgraph/chern.hpp"
#include "qgraph/scatter.hpp"

namespace qgraph {

struct ScanAxis {
  std::string param;  // ScatterParams member name
  double min = 0.0;
  double max = 0.0;
  int count = 0;      // >= 2
};

enum class OutputKind { csv, json, ppm };

struct ScanSpec {
  ScatterParams base;
  ScanAxis axis1;              // horizontal
  ScanAxis axis2;              // vertical
  int grid_n = 24;             // FHS flux grid size
  int band_index = 1;          // 1..4; 0 means "all"
  std::vector<OutputKind> outputs;

  void validate() const;  // throws ValidationError
  double axis1_value(int i) const;
  double axis2_value(int j) const;
  ScatterParams params_at(int i, int j) const;
};

enum class CellStatus : uint8_t { ok, boundary, undetermined };

struct Cell {
  ChernVector chern;
  CellStatus status = CellStatus::undetermined;
};

struct BoundaryCurve {
  std::vector<std::array<double, 2>> points;  // (axis1, axis2) coordinates
  int sign = 0;   // transition sign wrt the vertical axis (gamma if axis2 == gamma)
  int branch = 0;
};

struct PhaseGrid {
  ScanSpec spec;
  std::vector<Cell> cells;  // row-major, index j * axis1.count + i
  std::vector<BoundaryCurve> boundary_curves;
  int undetermined_count = 0;
  int boundary_count = 0;

  const Cell& at(int i, int j) const;
  bool operator==(const PhaseGrid& o) const;
};

/// Number of workers: jobs > 0 wins; else the PHASESCAN_JOBS environment
/// variable; else hardware concurrency.
int resolve_jobs(int jobs);

/// Deterministic parallel map over [0, n): results land by index.
void parallel_for_indexed(int n, int jobs, const std::function<void(int)>& fn);

/// Run the sweep: per-cell chern_fhs (errors recorded, never aborting) plus
/// analytic boundary curves traced across the plane.
PhaseGrid run_scan(const ScanSpec& spec, int jobs = 0);

// Emission. CSV: header axis1,axis2,c1,c2,c3,c4,converged with 12 significant
// digits on axis values; JSON mirrors PhaseGrid; PPM is plain P3 with blue =
// -1, red = +1, white = 0, gray = undetermined and curves in saturated
// red/blue by sign.
std::string emit_csv(const PhaseGrid& grid);
std::string emit_json(const PhaseGrid& grid);
std::string emit_ppm(const PhaseGrid& grid);
void write_file(const std::string& path, const std::string& content);  // IoError

/// Inverse of emit_json (round-trip is structural identity).
PhaseGrid parse_json_grid(const std::string& text);

/// Scan config = scatterer params + scan.* keys (see README). Throws
/// ValidationError on unknown keys or invalid axes.
ScanSpec parse_scan_config(const std::string& text);
ScanSpec load_scan_config(const std::string& path);

}  // namespace qgraph
