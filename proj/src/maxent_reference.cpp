// Straightforward serial IIS. Features are looked up through the instance
// hash index, independently of the scoring index the kernels use.
#include <algorithm>
#include <cmath>
#include <map>

#include "stag/maxent.hpp"

namespace stag::reference {
namespace {

// Scores and active sets of every future for one history.
struct Scored {
  std::vector<std::vector<int>> active;
  std::vector<double> logp;
};

Scored score(const MaxentModel& model, const std::vector<double>& w, StateCode prev2,
             StateCode prev1) {
  Scored out;
  const std::size_t ny = model.future_count();
  out.active.resize(ny);
  out.logp.resize(ny);
  for (std::size_t y = 0; y < ny; ++y) {
    out.active[y] = model.features().active_set({prev2, prev1, model.future_codes()[y]});
    double s = 0.0;
    for (int id : out.active[y]) s += w[id];
    out.logp[y] = s;
  }
  const double mx = *std::max_element(out.logp.begin(), out.logp.end());
  double z = 0.0;
  for (double s : out.logp) z += std::exp(s - mx);
  const double log_z = mx + std::log(z);
  for (double& s : out.logp) s -= log_z;
  return out;
}

double loglik_with(const MaxentModel& model, const std::vector<double>& w, const EventSpace& ev) {
  double ll = 0.0;
  for (const auto& h : ev.histories) {
    const Scored sc = score(model, w, h.prev2, h.prev1);
    for (const auto& [y, c] : h.futures) ll += static_cast<double>(c) * sc.logp[y];
  }
  return ev.total ? ll / static_cast<double>(ev.total) : 0.0;
}

}  // namespace

std::vector<double> expected_counts(const MaxentModel& model, const EventSpace& events) {
  std::vector<double> e(model.features().size(), 0.0);
  if (events.total == 0) return e;
  const double n = static_cast<double>(events.total);
  for (const auto& h : events.histories) {
    const Scored sc = score(model, model.weights(), h.prev2, h.prev1);
    const double ph = static_cast<double>(h.count) / n;
    for (std::size_t y = 0; y < sc.active.size(); ++y)
      for (int id : sc.active[y]) e[id] += ph * std::exp(sc.logp[y]);
  }
  return e;
}

double log_likelihood(const MaxentModel& model, const EventSpace& events) {
  return loglik_with(model, model.weights(), events);
}

TrainingInfo train_iis(MaxentModel& model, const EventSpace& events, const IisOptions& options) {
  if (events.total == 0) throw std::invalid_argument("train_iis: no training events");
  TrainingInfo info;
  info.cutoff = model.info.cutoff;
  const std::vector<double> target = empirical_expectations(model, events);
  std::vector<double> w = model.weights();
  const double n = static_cast<double>(events.total);
  const double prior = options.sigma2 * n;
  info.loglik.push_back(loglik_with(model, w, events));
  for (int it = 0; it < options.max_iterations; ++it) {
    std::vector<std::map<int, double>> a(w.size());
    for (const auto& h : events.histories) {
      const Scored sc = score(model, w, h.prev2, h.prev1);
      const double ph = static_cast<double>(h.count) / n;
      for (std::size_t y = 0; y < sc.active.size(); ++y) {
        const int m = static_cast<int>(sc.active[y].size());
        for (int id : sc.active[y]) a[id][m] += ph * std::exp(sc.logp[y]);
      }
    }
    double biggest = 0.0;
    std::vector<double> next = w;
    for (std::size_t f = 0; f < w.size(); ++f) {
      std::vector<std::pair<int, double>> terms(a[f].begin(), a[f].end());
      bool c = false;
      const double d = solve_iis_update(terms, target[f], w[f], prior, options.max_delta, &c);
      next[f] += d;
      info.clamped_updates += c;
      biggest = std::max(biggest, std::abs(d));
    }
    w = std::move(next);
    info.iterations = it + 1;
    info.max_delta.push_back(biggest);
    info.loglik.push_back(loglik_with(model, w, events));
    if (biggest < options.tolerance) {
      info.converged = true;
      break;
    }
  }
  model.set_weights(std::move(w));
  model.info = info;
  return info;
}

}  // namespace stag::reference
