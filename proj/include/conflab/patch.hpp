#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "conflab/analysis.hpp"
#include "conflab/cocycle.hpp"
#include "conflab/errors.hpp"
#include "conflab/perturb.hpp"

namespace conflab {

struct Bump {
  Interval cell;     // base cell of a tower
  Interval plateau;  // weight 1 here, ramps inside the rest of the cell
  std::vector<Matrix> window;  // one replacement per floor
};

// Trapezoidal weight of a floor arc whose plateau sits at the same offsets.
double bump_weight(const Bump& b, double offset);

// Ã(x) = ψ(x)A(x) + Σ φ_α(x)Ã_α on the floors of the bumps.
class BlendedGenerator : public Generator {
 public:
  BlendedGenerator(Cocycle original, std::vector<Bump> bumps);

  int dim() const override { return original_.dim(); }
  Matrix eval(const Point& x) const override;
  json to_json() const override;

  const Cocycle& original() const { return original_; }
  const std::vector<Bump>& bumps() const { return bumps_; }

  struct Weights {
    double psi = 1.0;
    double phi = 0.0;
    int bump = -1;
    int floor = -1;
  };
  Weights weights(double x) const;

 private:
  struct Floor {
    double start;
    double len;
    int bump;
    int level;
  };
  Cocycle original_;
  std::vector<Bump> bumps_;
  std::vector<Floor> floors_;  // sorted by start
};

// Replaces the maps on one bundle of a splitting, cross-bundle parts untouched:
// Ã(x) = A(x) + Σ_b E_b(Tx_s)(B̃_b(x) − B_b(x))E_b(x_s)ᵀ with x_s the nearest table sample.
class BlockPatchGenerator : public Generator {
 public:
  struct Block {
    std::vector<Matrix> frame_here;  // E_b(x_s)
    std::vector<Matrix> frame_next;  // E_b(T x_s)
    GeneratorPtr restricted;         // table of B_b
    GeneratorPtr patched;            // blended B̃_b
  };
  BlockPatchGenerator(Cocycle original, int samples, std::vector<Block> blocks);

  int dim() const override { return original_.dim(); }
  Matrix eval(const Point& x) const override;
  json to_json() const override;

 private:
  Cocycle original_;
  int samples_;
  std::vector<Block> blocks_;
};

struct ConformalizeOptions {
  int grid_size = kDefaultGrid;
  int eval_horizon = 2000;          // horizon for the reported Z estimates
  double main_fraction = 1.0 / 3.0;  // ε' = ε·main_fraction
  PerturbOptions perturb;
};

struct ConformalizeReport {
  std::shared_ptr<const BlendedGenerator> blended;
  std::optional<Cocycle> cocycle;  // Ã
  Castle castle;
  int n_required = 0;
  double epsilon = 0.0;
  double epsilon_main = 0.0;
  double rho = 0.0;
  double collar_frac = 0.0;
  int cells = 0;
  int perturbed_cells = 0;
  double max_deviation = 0.0;  // max-grid ‖Ã − A‖
  double z_before = 0.0;
  double z_after = 0.0;
  double target = 0.0;
};

ConformalizeReport conformalize(const Cocycle& a, double epsilon, int n, ConformalizeOptions opts = {});

struct RoundRecord {
  int round = 0;
  double epsilon = 0.0;
  std::vector<int> indices;
  double z_fine_before = 0.0;
  double z_fine_after = 0.0;
  double envelope = 0.0;  // a·Z_r + ε_r
  bool under_envelope = false;
  json blended;
};

struct IterationResult {
  double z_fine_start = 0.0;
  std::vector<RoundRecord> rounds;
  std::optional<Cocycle> final_cocycle;
  bool halted = false;
  Reason halt_reason = Reason::internal;
  std::string halt_message;
};

struct IterateOptions {
  ConformalizeOptions conformalize;
  int detection_horizon = 200;
  int n = 0;  // castle height floor; 0 asks the perturber
};

IterationResult iterate_conformalize(const Cocycle& a, const std::vector<double>& schedule, int rounds,
                                     IterateOptions opts = {});

Matrix blended_eval(const BlendedGenerator& b, const Point& x);

struct AuditRecord {
  long p = 0;                       // steps before the first base visit
  long q = 0;                       // steps after the last complete return
  std::vector<long> segment_lengths;
  std::vector<bool> good;
  long good_count = 0;
  long bad_count = 0;
  long remainder = 0;               // steps outside good segments
  double c0 = 0.0;
  double ledger = 0.0;              // certified over-estimate of ζ(Ã^n(x))
  double measured = 0.0;            // ζ(Ã^n(x))
  double bound_rate() const { return ledger; }
};

AuditRecord good_point_audit(const Cocycle& blended, const BlendedGenerator& b, const Point& x, long n);

}  // namespace conflab
