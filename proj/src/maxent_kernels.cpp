// Parallel IIS. Every (history, future) pair becomes a row listing its active
// features; the expectation pass fills row masses per history and the update
// pass reduces them per feature, so no two threads ever write the same slot
// and the summation order is fixed.
#include <algorithm>
#include <cmath>
#include <cstdint>

#include "stag/maxent.hpp"

namespace stag {
namespace {

struct RowPlan {
  std::size_t ny = 0;
  std::vector<std::size_t> row_offset;  // (h * ny + y) -> range in row_features
  std::vector<int> row_features;
  // transposed: per feature, its rows grouped by row length m
  std::vector<std::size_t> feat_offset;
  std::vector<std::size_t> feat_rows;
  std::vector<std::size_t> seg_offset;  // per feature -> range in segs
  struct Seg {
    int m;
    std::size_t begin, end;  // range in feat_rows
  };
  std::vector<Seg> segs;

  std::size_t rows() const { return row_offset.size() - 1; }
  int length(std::size_t r) const { return static_cast<int>(row_offset[r + 1] - row_offset[r]); }
};

RowPlan plan_rows(const MaxentModel& model, const EventSpace& ev) {
  RowPlan plan;
  plan.ny = model.future_count();
  const std::size_t nh = ev.histories.size();
  const std::size_t nrows = nh * plan.ny;
  plan.row_offset.assign(nrows + 1, 0);

#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t h = 0; h < static_cast<std::int64_t>(nh); ++h) {
    const auto& hist = ev.histories[h];
    std::size_t* len = &plan.row_offset[h * plan.ny + 1];
    model.for_each_active(hist.prev2, hist.prev1, [&](int y, int) { ++len[y]; });
  }
  for (std::size_t r = 0; r < nrows; ++r) plan.row_offset[r + 1] += plan.row_offset[r];
  plan.row_features.resize(plan.row_offset.back());

#pragma omp parallel
  {
    std::vector<std::size_t> fill(plan.ny);
#pragma omp for schedule(dynamic, 64)
    for (std::int64_t h = 0; h < static_cast<std::int64_t>(nh); ++h) {
      const auto& hist = ev.histories[h];
      const std::size_t base = h * plan.ny;
      for (std::size_t y = 0; y < plan.ny; ++y) fill[y] = plan.row_offset[base + y];
      model.for_each_active(hist.prev2, hist.prev1,
                            [&](int y, int fid) { plan.row_features[fill[y]++] = fid; });
    }
  }

  const std::size_t nf = model.features().size();
  plan.feat_offset.assign(nf + 1, 0);
  for (int fid : plan.row_features) ++plan.feat_offset[fid + 1];
  for (std::size_t f = 0; f < nf; ++f) plan.feat_offset[f + 1] += plan.feat_offset[f];
  plan.feat_rows.resize(plan.row_features.size());
  {
    std::vector<std::size_t> fill(plan.feat_offset.begin(), plan.feat_offset.end() - 1);
    for (std::size_t r = 0; r < nrows; ++r)
      for (std::size_t k = plan.row_offset[r]; k < plan.row_offset[r + 1]; ++k)
        plan.feat_rows[fill[plan.row_features[k]]++] = r;
  }
  plan.seg_offset.assign(nf + 1, 0);
  for (std::size_t f = 0; f < nf; ++f) {
    auto first = plan.feat_rows.begin() + plan.feat_offset[f];
    auto last = plan.feat_rows.begin() + plan.feat_offset[f + 1];
    std::stable_sort(first, last, [&](std::size_t a, std::size_t b) {
      return plan.length(a) < plan.length(b);
    });
    for (std::size_t i = plan.feat_offset[f]; i < plan.feat_offset[f + 1];) {
      const int m = plan.length(plan.feat_rows[i]);
      std::size_t j = i;
      while (j < plan.feat_offset[f + 1] && plan.length(plan.feat_rows[j]) == m) ++j;
      plan.segs.push_back({m, i, j});
      i = j;
    }
    plan.seg_offset[f + 1] = plan.segs.size();
  }
  return plan;
}

// mass[row] = p~(h) p(y|h); returns the mean conditional log-likelihood.
double fill_masses(const RowPlan& plan, const EventSpace& ev, const std::vector<double>& w,
                   std::vector<double>& mass) {
  const std::size_t nh = ev.histories.size();
  const double n = static_cast<double>(ev.total);
  mass.assign(plan.rows(), 0.0);
  std::vector<double> ll(nh, 0.0);

#pragma omp parallel
  {
    std::vector<double> s(plan.ny);
#pragma omp for schedule(dynamic, 64)
    for (std::int64_t h = 0; h < static_cast<std::int64_t>(nh); ++h) {
      const std::size_t base = h * plan.ny;
      double mx = -INFINITY;
      for (std::size_t y = 0; y < plan.ny; ++y) {
        double v = 0.0;
        for (std::size_t k = plan.row_offset[base + y]; k < plan.row_offset[base + y + 1]; ++k)
          v += w[plan.row_features[k]];
        s[y] = v;
        mx = std::max(mx, v);
      }
      double z = 0.0;
      for (std::size_t y = 0; y < plan.ny; ++y) z += std::exp(s[y] - mx);
      const double log_z = mx + std::log(z);
      const double ph = static_cast<double>(ev.histories[h].count) / n;
      for (std::size_t y = 0; y < plan.ny; ++y) mass[base + y] = ph * std::exp(s[y] - log_z);
      double l = 0.0;
      for (const auto& [y, c] : ev.histories[h].futures) l += static_cast<double>(c) * (s[y] - log_z);
      ll[h] = l;
    }
  }
  double total = 0.0;
  for (double v : ll) total += v;
  return total / n;
}

}  // namespace

std::vector<double> expected_counts(const MaxentModel& model, const EventSpace& events) {
  std::vector<double> e(model.features().size(), 0.0);
  if (events.total == 0) return e;
  const RowPlan plan = plan_rows(model, events);
  std::vector<double> mass;
  fill_masses(plan, events, model.weights(), mass);
#pragma omp parallel for schedule(dynamic, 256)
  for (std::int64_t f = 0; f < static_cast<std::int64_t>(e.size()); ++f) {
    double v = 0.0;
    for (std::size_t i = plan.feat_offset[f]; i < plan.feat_offset[f + 1]; ++i)
      v += mass[plan.feat_rows[i]];
    e[f] = v;
  }
  return e;
}

TrainingInfo train_iis(MaxentModel& model, const EventSpace& events, const IisOptions& options) {
  TrainingInfo info;
  info.cutoff = model.info.cutoff;
  if (events.total == 0) throw std::invalid_argument("train_iis: no training events");
  const RowPlan plan = plan_rows(model, events);
  const std::vector<double> target = empirical_expectations(model, events);
  const std::size_t nf = target.size();
  std::vector<double> w = model.weights();
  std::vector<double> mass;
  std::vector<double> delta(nf);
  std::vector<char> clamped(nf);
  // expectations are per event, so the prior variance scales with N
  const double prior = options.sigma2 * static_cast<double>(events.total);

  info.loglik.push_back(fill_masses(plan, events, w, mass));
  for (int it = 0; it < options.max_iterations; ++it) {
#pragma omp parallel
    {
      std::vector<std::pair<int, double>> a;
#pragma omp for schedule(dynamic, 256)
      for (std::int64_t f = 0; f < static_cast<std::int64_t>(nf); ++f) {
        a.clear();
        for (std::size_t s = plan.seg_offset[f]; s < plan.seg_offset[f + 1]; ++s) {
          const auto& seg = plan.segs[s];
          double v = 0.0;
          for (std::size_t i = seg.begin; i < seg.end; ++i) v += mass[plan.feat_rows[i]];
          a.emplace_back(seg.m, v);
        }
        bool c = false;
        delta[f] = solve_iis_update(a, target[f], w[f], prior, options.max_delta, &c);
        clamped[f] = c;
      }
    }
    double biggest = 0.0;
    for (std::size_t f = 0; f < nf; ++f) {
      w[f] += delta[f];
      biggest = std::max(biggest, std::abs(delta[f]));
      info.clamped_updates += clamped[f];
    }
    info.iterations = it + 1;
    info.max_delta.push_back(biggest);
    info.loglik.push_back(fill_masses(plan, events, w, mass));
    if (biggest < options.tolerance) {
      info.converged = true;
      break;
    }
  }
  model.set_weights(std::move(w));
  model.info = info;
  return info;
}

}  // namespace stag
