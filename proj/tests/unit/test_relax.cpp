#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "bohm/errors.hpp"
#include "bohm/relax.hpp"
#include "helpers.hpp"

using namespace bohm;
using testing::vec;

namespace {

const double A = 1.23, B = 1.15, C = std::sqrt(0.5);

Wavefunction eq30() { return model_eq30(A, B, C); }

EnsembleSpec born(long n, std::uint64_t seed) {
  EnsembleSpec e;
  e.sampler = SamplerKind::born_rule;
  e.count = n;
  e.seed = seed;
  return e;
}

EnsembleSpec box(long n, const Vec2& c, std::uint64_t seed = 1) {
  EnsembleSpec e;
  e.count = n;
  e.center = c;
  e.side = 0.4;
  e.seed = seed;
  return e;
}

DensityGrid blank(int n) {
  DensityGrid g;
  g.box = {0, 1, 0, 1};
  g.n = n;
  g.Ps.assign(std::size_t(n) * n, 0.0);
  g.psi_sq.assign(std::size_t(n) * n, 0.0);
  return g;
}

double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

TEST_CASE("ensemble spec validation") {
  EnsembleSpec e;
  e.count = 0;
  CHECK_THROWS_AS(e.validate(), InputError);
  e.count = 10;
  e.side = 0.0;
  CHECK_THROWS_AS(e.validate(), InputError);
  e.side = 0.4;
  e.sampler = SamplerKind::grid_lattice;
  e.lattice_n = 0;
  CHECK_THROWS_AS(e.validate(), InputError);
}

TEST_CASE("grid lattice on the unit box") {
  EnsembleSpec e;
  e.sampler = SamplerKind::grid_lattice;
  e.center = Vec2(0.5, 0.5);
  e.side = 1.0;
  e.lattice_n = 3;
  const auto p = sample_ensemble(e, eq30(), 0.0);
  REQUIRE(p.size() == 9);
  std::vector<std::pair<double, double>> got, want;
  for (const auto& q : p) got.emplace_back(q.x(), q.y());
  for (double x : {1.0 / 6, 0.5, 5.0 / 6})
    for (double y : {1.0 / 6, 0.5, 5.0 / 6}) want.emplace_back(x, y);
  std::sort(got.begin(), got.end());
  for (std::size_t k = 0; k < 9; ++k) {
    CHECK(got[k].first == doctest::Approx(want[k].first).epsilon(1e-15));
    CHECK(got[k].second == doctest::Approx(want[k].second).epsilon(1e-15));
  }
}

TEST_CASE("samplers are deterministic in the seed") {
  const auto wf = eq30();
  for (const EnsembleSpec& e : {born(500, 3), box(500, Vec2(-1.23, 0.84), 3)}) {
    const auto a = sample_ensemble(e, wf, 0.0);
    const auto b = sample_ensemble(e, wf, 0.0);
    CHECK(a == b);
    EnsembleSpec other = e;
    other.seed = 4;
    CHECK(sample_ensemble(other, wf, 0.0) != a);
  }
  const auto p = sample_ensemble(box(1000, Vec2(-1.5, 0.1275)), wf, 0.0);
  CHECK(p.size() == 1000);
  for (const auto& q : p) {
    CHECK(std::abs(q.x() + 1.5) <= 0.2);
    CHECK(std::abs(q.y() - 0.1275) <= 0.2);
  }
}

TEST_CASE("born-rule sample matches cell masses of |psi|^2") {
  const auto wf = eq30();
  const long N = 100000;
  const auto pts = sample_ensemble(born(N, 11), wf, 0.0);
  const Box2 b = default_box(wf);
  const int n = 12, sub = 30;
  std::vector<double> mass(n * n, 0.0), count(n * n, 0.0);
  const double hx = b.width() / (n * sub), hy = b.height() / (n * sub);
  for (int a = 0; a < n * sub; ++a)
    for (int c = 0; c < n * sub; ++c) {
      const auto f = eval(wf, vec(b.xmin + (a + 0.5) * hx, b.ymin + (c + 0.5) * hy), 0.0);
      mass[(a / sub) * n + c / sub] += std::norm(f.psi);
    }
  const double total = sum(mass);
  for (const auto& q : pts) {
    const int i = std::min(n - 1, int((q.x() - b.xmin) / b.width() * n));
    const int j = std::min(n - 1, int((q.y() - b.ymin) / b.height() * n));
    count[i * n + j] += 1;
  }
  double chi2 = 0.0;
  int cells = 0;
  for (int k = 0; k < n * n; ++k) {
    const double E = N * mass[k] / total;
    if (E < 5) continue;
    chi2 += (count[k] - E) * (count[k] - E) / E;
    ++cells;
  }
  MESSAGE("chi2 per cell " << chi2 / cells << " over " << cells << " cells");
  CHECK(cells > 30);
  CHECK(chi2 / cells < 2.0);
}

TEST_CASE("born-rule sampling fails where the density vanishes") {
  EnsembleSpec e = born(10, 1);
  e.region = {30, 31, 30, 31};
  CHECK_THROWS_AS(sample_ensemble(e, eq30(), 0.0), EnvelopeError);
}

TEST_CASE("single particle kernel shape") {
  const auto wf = eq30();
  GridSpec g;
  g.box = {-4, 4, -4, 4};
  g.n = 16;
  const Vec2 at(-4 + 6.5 * 0.5, -4 + 9.5 * 0.5);  // centre of cell (6, 9)
  const DensityGrid d = smoothed_density({at}, g, wf, 0.0);
  CHECK(d.sigma == 0.5);
  const auto P = [&](int i, int j) { return d.Ps[std::size_t(i) * 16 + j]; };
  const double peak = P(6, 9);
  CHECK(*std::max_element(d.Ps.begin(), d.Ps.end()) == peak);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j)
      for (int k = 0; k < 16; ++k)
        for (int l = 0; l < 16; ++l) {
          const double r1 = (d.center(i, j) - at).norm(), r2 = (d.center(k, l) - at).norm();
          if (r1 < r2 - 1e-12 && P(k, l) > 0.0) CHECK(P(i, j) > P(k, l));
        }
  // cells past the kernel reach
  CHECK(P(15, 0) == 0.0);
}

TEST_CASE("both fields carry unit mass") {
  const auto wf = eq30();
  for (Reference r : {Reference::smoothed, Reference::point}) {
    GridSpec g;
    g.reference = r;
    const auto pts = sample_ensemble(box(300, Vec2(-1.23, 0.84)), wf, 0.0);
    const DensityGrid d = smoothed_density(pts, g, wf, 0.7);
    CHECK(d.n == 24);
    CHECK(d.sigma == doctest::Approx(d.box.width() / 24));
    CHECK(sum(d.Ps) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sum(d.psi_sq) == doctest::Approx(1.0).epsilon(1e-12));
    for (double p : d.Ps) CHECK(p >= 0.0);
    CHECK(density_difference(d) >= 0.0);
  }
  CHECK_THROWS_AS(smoothed_density({}, GridSpec{}, wf, 0.0), InputError);
}

TEST_CASE("density difference of identical and disjoint fields") {
  DensityGrid g = blank(4);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (auto& x : g.psi_sq) x = U(rng);
  const double s = sum(g.psi_sq);
  for (auto& x : g.psi_sq) x /= s;
  g.Ps = g.psi_sq;
  CHECK(density_difference(g) == 0.0);
  const HValue h = h_function(g);
  CHECK(h.H == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  CHECK(h.anomalies == 0);

  DensityGrid d = blank(2);
  d.Ps = {0.5, 0.5, 0.0, 0.0};
  d.psi_sq = {0.0, 0.0, 0.25, 0.75};
  CHECK(density_difference(d) == doctest::Approx(2.0).epsilon(1e-15));
  const HValue hd = h_function(d);
  CHECK(hd.anomalies == 2);
  CHECK(hd.H == 0.0);
}

TEST_CASE("born-rule ensemble sits far below a box ensemble") {
  const auto wf = eq30();
  const long N = 100000;
  GridSpec g;
  const double Db = density_difference(smoothed_density(sample_ensemble(born(N, 5), wf, 0.0), g, wf, 0.0));
  const double Du = density_difference(
      smoothed_density(sample_ensemble(box(N, Vec2(-1.23, 0.84), 5), wf, 0.0), g, wf, 0.0));
  MESSAGE("D born " << Db << ", D box " << Du);
  CHECK(Db < 0.05 * Du);
}

TEST_CASE("born-rule D falls like 1/sqrt(N)") {
  const auto wf = eq30();
  GridSpec g;
  double d1 = 0.0, d2 = 0.0;
  const int seeds = 8;
  for (int s = 0; s < seeds; ++s) {
    d1 += density_difference(smoothed_density(sample_ensemble(born(20000, 100 + s), wf, 0.0), g, wf, 0.0));
    d2 += density_difference(smoothed_density(sample_ensemble(born(40000, 200 + s), wf, 0.0), g, wf, 0.0));
  }
  MESSAGE("D ratio on doubling N: " << d1 / d2);
  CHECK(d1 / d2 > 1.2);
  CHECK(d1 / d2 < 1.7);
}

TEST_CASE("H_s against D on the cells with an excess") {
  // Small smooth perturbation of a real reference field.
  const auto wf = eq30();
  DensityGrid g = smoothed_density({Vec2(0.0, 0.0)}, GridSpec{}, wf, 0.0);
  for (double amp : {0.02, 0.05, 0.1}) {
    DensityGrid p = g;
    for (int i = 0; i < p.n; ++i)
      for (int j = 0; j < p.n; ++j) {
        const std::size_t k = std::size_t(i) * p.n + j;
        p.Ps[k] = p.psi_sq[k] * (1.0 + amp * std::sin(0.9 * i) * std::cos(1.3 * j));
      }
    const double s = sum(p.Ps);
    for (double& x : p.Ps) x /= s;
    double h_plus = 0.0, d_plus = 0.0;
    for (std::size_t k = 0; k < p.Ps.size(); ++k)
      if (p.Ps[k] > p.psi_sq[k]) {
        h_plus += p.Ps[k] * std::log(p.Ps[k] / p.psi_sq[k]);
        d_plus += p.Ps[k] - p.psi_sq[k];
      }
    CHECK(std::abs(h_plus - d_plus) < 0.2 * d_plus);
    CHECK(h_function(p).H >= -1e-9);
  }
}

TEST_CASE("Gibbs inequality on random equal-mass fields") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    DensityGrid g = blank(6);
    for (auto& x : g.Ps) x = U(rng) < 0.2 ? 0.0 : U(rng);
    for (auto& x : g.psi_sq) x = 0.01 + U(rng);
    const double a = sum(g.Ps), b = sum(g.psi_sq);
    for (auto& x : g.Ps) x /= a;
    for (auto& x : g.psi_sq) x /= b;
    const HValue h = h_function(g);
    CHECK(h.anomalies == 0);
    CHECK(h.H >= -1e-9);
  }
}

TEST_CASE("D and H_s agree for small fluctuations") {
  const auto wf = eq30();
  DensityGrid g = smoothed_density({Vec2(0.0, 0.0)}, GridSpec{}, wf, 0.0);
  g.Ps = g.psi_sq;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(-0.25, 0.25);
  for (double& x : g.Ps) x *= 1.0 + U(rng);
  const double s = sum(g.Ps);
  double worst = 0.0;
  for (std::size_t k = 0; k < g.Ps.size(); ++k) {
    g.Ps[k] /= s;
    worst = std::max(worst, std::abs(g.Ps[k] / g.psi_sq[k] - 1.0));
  }
  REQUIRE(worst < 0.3);
  const double D = density_difference(g), H = h_function(g).H;
  MESSAGE("D = " << D << ", H_s = " << H);
  CHECK(std::abs(D - H) / D < 0.5);
}

TEST_CASE("convex hull area and snapshot schedule") {
  CHECK(convex_hull_area({Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1), Vec2(0.5, 0.5)}) ==
        doctest::Approx(1.0).epsilon(1e-15));
  CHECK(convex_hull_area({Vec2(0, 0), Vec2(1, 1)}) == 0.0);
  const std::vector<double> s{0, 1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000};
  CHECK(geometric_snapshots(1e4) == s);
  const auto t = geometric_snapshots(300);
  CHECK(t.back() == 300);
  CHECK(t[t.size() - 2] == 200);
}

TEST_CASE("born-rule ensemble stays at the noise floor") {
  RelaxationConfig cfg;
  cfg.wf = eq30();
  cfg.ensemble = born(4000, 21);
  cfg.times = {0, 1, 10, 50};
  const RelaxationSeries r = run_relaxation(cfg);
  REQUIRE(r.D.size() == 4);
  CHECK(r.failed == 0);
  for (double D : r.D) {
    CHECK(D >= 0.0);
    CHECK(D <= 2.0 * r.D[0]);
  }
  CHECK(r.H.size() == r.times.size());
  CHECK(r.anomalies.size() == r.times.size());
  CHECK(r.hull_area.size() == r.times.size());
}

TEST_CASE("relaxation is independent of the thread count") {
  RelaxationConfig cfg;
  cfg.wf = eq30();
  cfg.ensemble = box(200, Vec2(-1.23, 0.84));
  cfg.times = {0, 5, 20};
  cfg.threads = 1;
  const RelaxationSeries a = run_relaxation(cfg);
  cfg.threads = 3;
  const RelaxationSeries b = run_relaxation(cfg);
  CHECK(a.D == b.D);
  CHECK(a.H == b.H);
  CHECK(a.hull_area == b.hull_area);
}

TEST_CASE("too many failed trajectories abort the experiment") {
  RelaxationConfig cfg;
  cfg.wf = eq30();
  cfg.ensemble = box(100, Vec2(-1.23, 0.84));
  cfg.times = {0, 50};
  cfg.settings.min_step = 0.05;  // close node passes need far smaller steps
  CHECK_THROWS_AS(run_relaxation(cfg), ExperimentError);
}
