#include <random>

#include <benchmark/benchmark.h>

#include "sdmon/runner.hpp"

using namespace sdmon;

namespace {

std::vector<std::pair<int, int>> random_pairs(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> ids(1, 50);
  std::vector<std::pair<int, int>> out;
  while (out.size() < n) {
    const int a = ids(rng), b = ids(rng);
    if (a != b) out.push_back({a, b});
  }
  return out;
}

WorldState crowd(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-8, 8);
  WorldState w;
  w.bounds_min = {-10, -10};
  w.bounds_max = {10, 10};
  for (int k = 0; k < n; ++k) {
    Pedestrian p;
    p.id = k + 1;
    p.position = {u(rng), u(rng)};
    if (p.position.norm() < 1.0) p.position.x += 2.0;
    w.pedestrians.push_back(p);
  }
  return w;
}

}  // namespace

static void BM_ClassifyGroups(benchmark::State& state) {
  const auto pairs = random_pairs(static_cast<std::size_t>(state.range(0)), 7);
  for (auto _ : state) benchmark::DoNotOptimize(classify_groups(pairs));
}
BENCHMARK(BM_ClassifyGroups)->Arg(10)->Arg(60)->Arg(500);

static void BM_Homography(benchmark::State& state) {
  const std::array<Point2, 4> src{Point2{360, 1000}, {1560, 1000}, {1260, 300}, {660, 300}};
  const std::array<Point2, 4> dst{Point2{0, 0}, {9, 0}, {9, 12}, {0, 12}};
  for (auto _ : state) {
    const Homography h = solve_homography(src, dst);
    benchmark::DoNotOptimize(apply_homography(h, {900, 700}));
  }
}
BENCHMARK(BM_Homography);

static void BM_ConvexHull(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5, 5);
  std::vector<Point2> pts(static_cast<std::size_t>(state.range(0)));
  for (auto& p : pts) p = {u(rng), u(rng)};
  for (auto _ : state) benchmark::DoNotOptimize(convex_hull(pts));
}
BENCHMARK(BM_ConvexHull)->Arg(8)->Arg(64)->Arg(1024);

static void BM_Lidar(benchmark::State& state) {
  const WorldState w = crowd(static_cast<int>(state.range(0)), 11);
  for (auto _ : state) benchmark::DoNotOptimize(sense_lidar(w, w.robot));
}
BENCHMARK(BM_Lidar)->Arg(5)->Arg(40);

static void BM_RgbdFrame(benchmark::State& state) {
  const WorldState w = crowd(static_cast<int>(state.range(0)), 12);
  const RgbdCameraModel cam;
  std::mt19937_64 rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(sense_rgbd(w, cam, rng));
}
BENCHMARK(BM_RgbdFrame)->Arg(5)->Arg(40);

static void BM_BaselinePlan(benchmark::State& state) {
  WorldState w = crowd(20, 13);
  std::vector<TrackedPedestrian> peds;
  for (const auto& p : w.pedestrians) peds.push_back({p.id, p.position, -0.3 * p.position / p.position.norm()});
  const FreezingZone zone = build_pfz(peds, w.robot, 1.0);
  const PlannerInput in{{6, 0}, sense_lidar(w, w.robot), {}};
  const PlannerConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(baseline_plan(in, zone, w.robot, cfg));
}
BENCHMARK(BM_BaselinePlan);

static void BM_RunFig8(benchmark::State& state) {
  const Scenario sc = load_scenario(std::string(SDMON_SCENARIO_DIR) + "/fig8c.scn");
  RunOptions opts;
  opts.record_trajectories = false;
  for (auto _ : state) benchmark::DoNotOptimize(run_scenario(sc, opts));
}
BENCHMARK(BM_RunFig8)->Unit(benchmark::kMillisecond)->Iterations(3);
BENCHMARK_MAIN();
