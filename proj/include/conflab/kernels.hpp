#pragma once

#include <functional>
#include <span>
#include <vector>

#include "conflab/cocycle.hpp"

namespace conflab::kernels {

// Reads log singular values (descending), writes `outputs` numbers.
using SpectrumFunctional = std::function<void(std::span<const double> lambdas, std::span<double> out)>;

// Max/min/mean over points of each functional output, per horizon.
struct GridStats {
  std::vector<int> horizons;
  int outputs = 0;
  std::vector<double> max, min, mean;  // [h * outputs + o]

  double max_at(int h, int o = 0) const { return max[h * outputs + o]; }
  double min_at(int h, int o = 0) const { return min[h * outputs + o]; }
  double mean_at(int h, int o = 0) const { return mean[h * outputs + o]; }
};

// Reference loop, one point after another.
namespace serial {
GridStats sweep(const Cocycle& a, std::span<const Point> points, std::span<const int> horizons, int outputs,
                const SpectrumFunctional& f);
std::vector<std::vector<double>> lambdas_at(const Cocycle& a, std::span<const Point> points, int n);
}  // namespace serial

// OpenMP over fixed chunks of points, reduced in chunk order so the result does
// not depend on the thread count.
namespace parallel {
GridStats sweep(const Cocycle& a, std::span<const Point> points, std::span<const int> horizons, int outputs,
                const SpectrumFunctional& f);
std::vector<std::vector<double>> lambdas_at(const Cocycle& a, std::span<const Point> points, int n);
}  // namespace parallel

using parallel::lambdas_at;
using parallel::sweep;

}  // namespace conflab::kernels
