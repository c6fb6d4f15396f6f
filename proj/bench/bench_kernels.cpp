// Serial reference vs OpenMP kernel, same inputs. Run with OMP_NUM_THREADS
// set to compare scaling.
#include <benchmark/benchmark.h>

#include "toonsynth/chroma_key.hpp"
#include "toonsynth/fixtures.hpp"
#include "toonsynth/harmonizer.hpp"
#include "toonsynth/imaging/distance.hpp"
#include "toonsynth/imaging/filter.hpp"
#include "toonsynth/oracles.hpp"

using namespace toonsynth;

namespace {

const ImageBuffer& frame() {
  static const ImageBuffer f = [] {
    RngStream rng(1, 0, StreamTag::Test);
    return fixtures::make_chroma_frame(rng, 720, 0.33, 0.35).frame;
  }();
  return f;
}

const ImageBuffer& small_frame() {
  static const ImageBuffer f = [] {
    RngStream rng(2, 0, StreamTag::Test);
    return fixtures::make_chroma_frame(rng, 256, 0.6, 0.35).frame;
  }();
  return f;
}

const BinaryMask& shape() {
  static const BinaryMask m = [] {
    RngStream rng(3, 0, StreamTag::Test);
    return oracle::random_shape_mask(rng, 720, 720);
  }();
  return m;
}

struct Points {
  std::vector<Rgb> pts;
  std::vector<double> weights;
};

const Points& points() {
  static const Points p = [] {
    RngStream rng(4, 0, StreamTag::Test);
    Points out;
    for (int i = 0; i < 20000; ++i) {
      out.pts.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
      out.weights.push_back(static_cast<double>(rng.uniform_int(1, 20)));
    }
    return out;
  }();
  return p;
}

void BM_BilateralSerial(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(serial::bilateral_filter(small_frame(), 17, 80.0));
}
void BM_BilateralParallel(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(bilateral_filter(small_frame(), 17, 80.0));
}
void BM_EdtSerial(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(serial::squared_distance_to_complement(shape(), Border::Exterior));
}
void BM_EdtParallel(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(squared_distance_to_complement(shape(), Border::Exterior));
}
void BM_HueHistogramSerial(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(serial::hue_histogram(frame()));
}
void BM_HueHistogramParallel(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(hue_histogram(frame()));
}
void BM_KMeansSerial(benchmark::State& s) {
  for (auto _ : s) {
    RngStream rng(9);
    benchmark::DoNotOptimize(serial::kmeans(points().pts, points().weights, 16, rng));
  }
}
void BM_KMeansParallel(benchmark::State& s) {
  for (auto _ : s) {
    RngStream rng(9);
    benchmark::DoNotOptimize(kmeans(points().pts, points().weights, 16, rng));
  }
}

}  // namespace

BENCHMARK(BM_BilateralSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BilateralParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EdtSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EdtParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HueHistogramSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HueHistogramParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KMeansSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KMeansParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
