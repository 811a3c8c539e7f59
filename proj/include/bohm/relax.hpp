#pragma once

#include <cstdint>
#include <vector>

#include "bohm/dynamics.hpp"
#include "bohm/wavefield.hpp"

namespace bohm {

struct Box2 {
  double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  bool empty() const { return !(width() > 0.0) || !(height() > 0.0); }
  static Box2 centered(const Vec2& c, double side);
};

// Square box of +-4 widths of the widest ground-state axis.
Box2 default_box(const Wavefunction& wf);

enum class SamplerKind { uniform_box, born_rule, grid_lattice };

struct EnsembleSpec {
  long count = 1000;  // ignored by grid_lattice, which yields lattice_n^2 points
  SamplerKind sampler = SamplerKind::uniform_box;
  Vec2 center = Vec2::Zero();  // uniform_box and grid_lattice
  double side = 0.4;
  Box2 region;  // born_rule; empty means default_box
  int lattice_n = 10;
  std::uint64_t seed = 1;

  void validate() const;
};

// Deterministic for a given spec. The born-rule sampler rejects against
// density_bound and raises EnvelopeError below 1e-4 acceptance.
std::vector<Vec2> sample_ensemble(const EnsembleSpec& spec, const Wavefunction& wf, double t0);

// smoothed: |psi|^2 passed through the same kernel as the particles, so a
// born-rule ensemble differs from it only by sampling noise.
// point: |psi|^2 at the cell centers.
enum class Reference { smoothed, point };

struct GridSpec {
  Box2 box;        // empty means default_box
  int n = 24;      // cells per side
  double sigma = 0.0;  // 0 means one cell width
  Reference reference = Reference::smoothed;
  int subdivisions = 8;  // quadrature points per cell and axis for the smoothed reference
};

// Both fields are scaled to unit mass over the grid.
struct DensityGrid {
  Box2 box;
  int n = 0;
  double sigma = 0.0;
  double t = 0.0;
  std::vector<double> Ps;      // n*n, index i*n + j, i along x
  std::vector<double> psi_sq;  // same layout
  Vec2 center(int i, int j) const;
};

// Gaussian kernel truncated at a radius of 5 sigma.
DensityGrid smoothed_density(const std::vector<Vec2>& positions, const GridSpec& spec,
                             const Wavefunction& wf, double t);

double density_difference(const DensityGrid& grid);

struct HValue {
  double H = 0.0;
  int anomalies = 0;  // cells with P_s > 0 where psi_sq = 0, left out of the sum
};

HValue h_function(const DensityGrid& grid);

double convex_hull_area(const std::vector<Vec2>& positions);

struct RelaxationConfig {
  Wavefunction wf;
  EnsembleSpec ensemble;
  GridSpec grid;
  double t0 = 0.0;
  std::vector<double> times;  // snapshot times, increasing, >= t0
  IntegratorSettings settings;
  int threads = 0;
  bool keep_grids = false;
  bool keep_positions = false;
};

struct RelaxationSeries {
  std::vector<double> times;
  std::vector<double> D;
  std::vector<double> H;
  std::vector<int> anomalies;
  std::vector<double> hull_area;
  long particles = 0;
  long failed = 0;
  std::vector<DensityGrid> grids;                // when keep_grids
  std::vector<std::vector<Vec2>> positions;      // when keep_positions
};

// 0, 1, 2, 5, 10, 20, 50, ... up to and including t_end.
std::vector<double> geometric_snapshots(double t_end);

// Failed trajectories are dropped from every snapshot; more than 1% raises
// ExperimentError.
RelaxationSeries run_relaxation(const RelaxationConfig& config);

}  // namespace bohm
