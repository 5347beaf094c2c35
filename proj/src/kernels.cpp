#include "conflab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "conflab/errors.hpp"

namespace conflab::kernels {

namespace {

constexpr int kChunk = 64;

void check_horizons(std::span<const int> horizons) {
  require(!horizons.empty(), Reason::argument, "sweep: no horizons");
  require(horizons.front() >= 1, Reason::argument, "sweep: horizons must be positive");
  for (size_t h = 1; h < horizons.size(); ++h)
    require(horizons[h] > horizons[h - 1], Reason::argument, "sweep: horizons must increase");
}

struct Accum {
  std::vector<double> max, min, sum;
  explicit Accum(size_t n)
      : max(n, -std::numeric_limits<double>::infinity()),
        min(n, std::numeric_limits<double>::infinity()),
        sum(n, 0.0) {}
};

// Folds one orbit and feeds every checkpoint into the accumulator.
void fold_point(const Cocycle& a, const Point& x, std::span<const int> horizons, int outputs,
                const SpectrumFunctional& f, Accum& acc) {
  ScaledProduct p(a.dim());
  std::vector<double> out(outputs);
  size_t next = 0;
  for (int j = 0; j < horizons.back(); ++j) {
    p.left_multiply(a(a.base().step(x, j)));
    if (j + 1 == horizons[next]) {
      const auto& l = p.log_values();
      f(std::span<const double>(l.data(), a.dim()), out);
      for (int o = 0; o < outputs; ++o) {
        const size_t k = next * outputs + o;
        acc.max[k] = std::max(acc.max[k], out[o]);
        acc.min[k] = std::min(acc.min[k], out[o]);
        acc.sum[k] += out[o];
      }
      ++next;
    }
  }
}

// Chunk sums are added in chunk order by both kernels, so they agree bit for bit.
void merge_into(Accum& acc, const Accum& part) {
  for (size_t k = 0; k < acc.sum.size(); ++k) {
    acc.max[k] = std::max(acc.max[k], part.max[k]);
    acc.min[k] = std::min(acc.min[k], part.min[k]);
    acc.sum[k] += part.sum[k];
  }
}

GridStats finish(std::span<const int> horizons, int outputs, const Accum& acc, size_t count) {
  GridStats g;
  g.horizons.assign(horizons.begin(), horizons.end());
  g.outputs = outputs;
  g.max = acc.max;
  g.min = acc.min;
  g.mean.resize(acc.sum.size());
  // The clamp keeps a constant field exact despite rounding in the sum.
  for (size_t k = 0; k < acc.sum.size(); ++k)
    g.mean[k] = std::clamp(acc.sum[k] / static_cast<double>(count), acc.min[k], acc.max[k]);
  return g;
}

std::vector<double> final_lambdas(const Cocycle& a, const Point& x, int n) {
  const auto l = a.product(x, n).log_values();
  return {l.data(), l.data() + a.dim()};
}

}  // namespace

namespace serial {

GridStats sweep(const Cocycle& a, std::span<const Point> points, std::span<const int> horizons, int outputs,
                const SpectrumFunctional& f) {
  check_horizons(horizons);
  require(!points.empty(), Reason::argument, "sweep: no points");
  const size_t slots = horizons.size() * outputs;
  Accum acc(slots);
  for (size_t lo = 0; lo < points.size(); lo += kChunk) {
    Accum part(slots);
    const size_t hi = std::min(points.size(), lo + kChunk);
    for (size_t p = lo; p < hi; ++p) fold_point(a, points[p], horizons, outputs, f, part);
    merge_into(acc, part);
  }
  return finish(horizons, outputs, acc, points.size());
}

std::vector<std::vector<double>> lambdas_at(const Cocycle& a, std::span<const Point> points, int n) {
  std::vector<std::vector<double>> out;
  out.reserve(points.size());
  for (const auto& x : points) out.push_back(final_lambdas(a, x, n));
  return out;
}

}  // namespace serial

namespace parallel {

GridStats sweep(const Cocycle& a, std::span<const Point> points, std::span<const int> horizons, int outputs,
                const SpectrumFunctional& f) {
  check_horizons(horizons);
  require(!points.empty(), Reason::argument, "sweep: no points");
  const size_t slots = horizons.size() * outputs;
  const long chunks = static_cast<long>((points.size() + kChunk - 1) / kChunk);
  std::vector<Accum> partial(chunks, Accum(slots));
  bool failed = false;
  Error first(Reason::internal, "");
#pragma omp parallel for schedule(dynamic)
  for (long c = 0; c < chunks; ++c) {
    try {
      const size_t lo = c * kChunk, hi = std::min(points.size(), lo + kChunk);
      for (size_t p = lo; p < hi; ++p) fold_point(a, points[p], horizons, outputs, f, partial[c]);
    } catch (const Error& e) {
#pragma omp critical
      {
        if (!failed) first = e;
        failed = true;
      }
    }
  }
  if (failed) throw first;
  Accum acc(slots);
  for (const auto& part : partial) merge_into(acc, part);
  return finish(horizons, outputs, acc, points.size());
}

std::vector<std::vector<double>> lambdas_at(const Cocycle& a, std::span<const Point> points, int n) {
  std::vector<std::vector<double>> out(points.size());
  bool failed = false;
  Error first(Reason::internal, "");
#pragma omp parallel for schedule(dynamic, 16)
  for (long p = 0; p < static_cast<long>(points.size()); ++p) {
    try {
      out[p] = final_lambdas(a, points[p], n);
    } catch (const Error& e) {
#pragma omp critical
      {
        if (!failed) first = e;
        failed = true;
      }
    }
  }
  if (failed) throw first;
  return out;
}

}  // namespace parallel

}  // namespace conflab::kernels
