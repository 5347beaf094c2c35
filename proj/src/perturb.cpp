#include "conflab/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <sstream>

#include "conflab/errors.hpp"

namespace conflab {

namespace {

std::mutex horizon_mutex;

}  // namespace

double plan_zeta_rate(const std::vector<Matrix>& maps) {
  require(!maps.empty(), Reason::argument, "plan_zeta_rate: empty plan");
  ScaledProduct p(static_cast<int>(maps.front().rows()));
  for (const auto& m : maps) p.left_multiply(m);
  return p.singular_data().zeta / static_cast<double>(maps.size());
}

double plan_deviation(const Cocycle& a, const Point& x, const std::vector<Matrix>& maps) {
  double dev = 0.0;
  for (size_t j = 0; j < maps.size(); ++j)
    dev = std::max(dev, operator_norm(Matrix(maps[j] - a(a.base().step(x, static_cast<long>(j))))));
  return dev;
}

SegmentPerturber::SegmentPerturber(const Cocycle& a, double epsilon, PerturbOptions opts)
    : a_(a), epsilon_(epsilon), opts_(opts), consts_(dimension_constants(a.dim())) {
  require(epsilon > 0.0, Reason::argument, "perturb: epsilon must be positive");
  for (int i = 1; i < a.dim(); ++i) windows_.push_back(find_window(a, i, epsilon, opts.window_max, opts.grid_size));
}

const SegmentPerturber::Horizon& SegmentPerturber::horizon(int n) const {
  std::lock_guard<std::mutex> lock(horizon_mutex);
  auto it = horizons_.find(n);
  if (it != horizons_.end()) return it->second;
  std::vector<int> hs(n);
  std::iota(hs.begin(), hs.end(), 1);
  const auto series = distortion_series(a_, Functional::zeta, hs, opts_.grid_size);
  Horizon h{series.sup_rate.back(), n};
  const double delta = epsilon_ * opts_.delta_fraction;
  for (int j = 0; j < n; ++j)
    if (series.sup_rate[j] < h.z_est + delta) {
      h.m_control = j + 1;
      break;
    }
  return horizons_.emplace(n, h).first->second;
}

double SegmentPerturber::z_estimate(int n) const { return horizon(n).z_est; }
int SegmentPerturber::zeta_control(int n) const { return horizon(n).m_control; }

int SegmentPerturber::hitting_time() const {
  int worst = 0;
  for (const auto& w : windows_) {
    int prev = 0;
    for (int g : w.members) {
      worst = std::max(worst, g - prev);
      prev = g;
    }
  }
  return worst;
}

int SegmentPerturber::min_length(int n) const {
  int m = 0;
  for (const auto& w : windows_) m = std::max(m, w.m);
  return m + 2 * zeta_control(n) + 1;
}

PerturbationPlan SegmentPerturber::plan(const Point& x, int n) const {
  const int need = min_length(n);
  require(n >= need, Reason::argument,
          "perturb_segment: n = " + std::to_string(n) + " below the minimum length " + std::to_string(need));
  const int d = a_.dim();
  PerturbationPlan plan;
  plan.anchor = x;
  plan.n = n;
  plan.epsilon = epsilon_;
  plan.z_estimate = z_estimate(n);
  plan.target = consts_.a * plan.z_estimate + epsilon_;

  std::vector<Matrix> base(n);
  for (int j = 0; j < n; ++j) base[j] = a_(a_.base().step(x, j));
  ScaledProduct full(d);
  for (const auto& b : base) full.left_multiply(b);
  const auto sd = full.singular_data();
  plan.zeta_before = sd.zeta / n;

  if (plan.zeta_before < consts_.a * plan.z_estimate || sd.conformal()) {
    plan.maps = base;
    plan.zeta_after = plan_zeta_rate(plan.maps);
    plan.certificate = "early_exit";
    return plan;
  }

  const int i0 = max_half_gap(sd).index;
  const Window& win = windows_[i0 - 1];
  const int m0 = win.m, mc = zeta_control(n);
  plan.i0 = i0;
  plan.m0 = m0;

  // γ_{i0} of P_k = A^k(x) and Q_k = A^{n-k-m0}(T^{k+m0} x).
  std::vector<double> gp(n - m0 + 1), gq(n - m0 + 1);
  {
    ScaledProduct p(d);
    gp[0] = 0.0;
    for (int k = 1; k <= n - m0; ++k) {
      p.left_multiply(base[k - 1]);
      gp[k] = 0.5 * (p.log_value(i0 - 1) - p.log_value(i0));
    }
    ScaledProduct q(d);
    gq[n - m0] = 0.0;
    for (int k = n - m0 - 1; k >= 0; --k) {
      q.right_multiply(base[k + m0]);
      gq[k] = 0.5 * (q.log_value(i0 - 1) - q.log_value(i0));
    }
  }
  std::vector<int> cands;
  for (int k = mc; k <= n - m0 - mc; ++k) cands.push_back(k);
  require(!cands.empty(), Reason::internal, "perturb_segment: empty balance range");
  std::stable_sort(cands.begin(), cands.end(),
                   [&](int u, int v) { return std::abs(gp[u] - gq[u]) < std::abs(gp[v] - gq[v]); });

  std::vector<int> members, others;
  for (int k : cands) {
    const Point y = a_.base().step(x, k);
    (window_log_ratio(a_, y, i0, m0) > win.log_threshold ? members : others).push_back(k);
  }

  double best_after = INFINITY;
  int best_k = -1;
  std::string last_error;
  auto attempt = [&](int k, const char* cert) -> bool {
    ScaledProduct p(d), q(d);
    for (int j = 0; j < k; ++j) p.left_multiply(base[j]);
    for (int j = k + m0; j < n; ++j) q.left_multiply(base[j]);
    const auto frames = bv_subspaces(p, q, i0);
    MergeResult merged;
    try {
      merged = merge_subspaces(a_, a_.base().step(x, k), win, frames.e, frames.f, epsilon_);
    } catch (const Error& e) {
      if (e.reason() != Reason::hypothesis_violation && e.reason() != Reason::internal_contradiction) throw;
      last_error = e.what();
      return false;
    }
    std::vector<Matrix> maps = base;
    std::copy(merged.maps.begin(), merged.maps.end(), maps.begin() + k);
    const double after = plan_zeta_rate(maps);
    const double dev = plan_deviation(a_, x, maps);
    if (after < best_after) {
      best_after = after;
      best_k = k;
    }
    if (dev >= epsilon_ || !(after < plan.target)) return false;
    plan.k = k;
    plan.maps = std::move(maps);
    plan.zeta_after = after;
    plan.corner = merged.corner;
    plan.delta = std::abs(gp[k] - gq[k]);
    plan.max_deviation = dev;
    plan.certificate = cert;
    return true;
  };

  for (int k : members)
    if (attempt(k, "window_member")) return plan;
  int tries = 0;
  for (int k : others) {
    if (++tries > opts_.fallback_attempts) break;
    if (attempt(k, "postcondition")) return plan;
  }
  std::ostringstream msg;
  msg << "perturb_segment: zeta drop failed at anchor " << x.x() << ": zeta_before/n = " << plan.zeta_before
      << ", best zeta_after/n = " << best_after << " (k = " << best_k << "), target = " << plan.target
      << ", i0 = " << i0 << ", m0 = " << m0 << ", window members = " << members.size()
      << ", gamma_i0/n = " << sd.gamma(i0) / n;
  if (!last_error.empty()) msg << ", last merge error: " << last_error;
  fail(Reason::drop_failure, msg.str());
}

PerturbationPlan perturb_segment(const Cocycle& a, const Point& x, int n, double epsilon, PerturbOptions opts) {
  return SegmentPerturber(a, epsilon, opts).plan(x, n);
}

}  // namespace conflab
