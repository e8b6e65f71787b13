#include "mdm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "mdm/errors.hpp"

namespace mdm {

std::size_t violation_count(const DomainSpec& domain, const Matrix& samples) {
  std::size_t bad = 0;
  for (std::size_t i = 0; i < samples.rows; ++i)
    if (samples.cols != domain.dim() || !domain.contains(samples.row(i))) ++bad;
  return bad;
}

std::size_t violation_count(const SampleBatch& batch) {
  return violation_count(batch.domain, batch.samples);
}

Moments empirical_moments(const Matrix& samples) {
  if (samples.rows < 2)
    throw InsufficientData("empirical_moments needs at least 2 samples");
  const std::size_t n = samples.rows, d = samples.cols;
  Moments m{Vec(d, 0.0), Vec(d, 0.0)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) m.mean[j] += samples(i, j);
  for (double& v : m.mean) v /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double e = samples(i, j) - m.mean[j];
      m.variance[j] += e * e;
    }
  for (double& v : m.variance) v /= static_cast<double>(n - 1);
  return m;
}

Moments empirical_moments(const SampleBatch& batch) { return empirical_moments(batch.samples); }

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ShapeError("kl_divergence: size mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) return std::numeric_limits<double>::infinity();
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

Vec smoothed_histogram(std::span<const double> samples, std::size_t bins, double lo,
                       double hi, double smoothing) {
  if (bins < 2) throw ConfigError("histogram needs at least 2 bins");
  if (samples.empty()) throw InsufficientData("histogram of an empty sample set");
  Vec h(bins, 0.0);
  const double width = hi - lo;
  for (double x : samples) {
    std::size_t b = 0;
    if (width > 0.0) {
      const double pos = (x - lo) / width * static_cast<double>(bins);
      b = pos <= 0.0 ? 0 : std::min(bins - 1, static_cast<std::size_t>(pos));
    }
    h[b] += 1.0;
  }
  const double n = static_cast<double>(samples.size());
  double total = 0.0;
  for (double& v : h) {
    v = v / n + smoothing;
    total += v;
  }
  for (double& v : h) v /= total;
  return h;
}

double histogram_kl(std::span<const double> p, std::span<const double> q, std::size_t bins,
                    double smoothing) {
  if (bins == 0) throw ConfigError("histogram_kl: bins must be positive");
  if (p.empty() || q.empty()) throw InsufficientData("histogram_kl: empty sample set");
  const auto [pmin, pmax] = std::minmax_element(p.begin(), p.end());
  const auto [qmin, qmax] = std::minmax_element(q.begin(), q.end());
  const double lo = std::min(*pmin, *qmin);
  const double hi = std::max(*pmax, *qmax);
  const Vec hp = smoothed_histogram(p, bins, lo, hi, smoothing);
  const Vec hq = smoothed_histogram(q, bins, lo, hi, smoothing);
  return kl_divergence(hp, hq);
}

namespace {

Vec sorted_copy(std::span<const double> v) {
  Vec s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  return s;
}

Vec order_subsample(const Vec& sorted, std::size_t n) {
  if (sorted.size() == n) return sorted;
  Vec out(n);
  const double N = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>((static_cast<double>(i) + 0.5) * N /
                                            static_cast<double>(n));
    out[i] = sorted[std::min(r, sorted.size() - 1)];
  }
  return out;
}

}  // namespace

double wasserstein1_1d(std::span<const double> p, std::span<const double> q) {
  if (p.empty() || q.empty()) throw InsufficientData("wasserstein1_1d: empty sample set");
  const std::size_t n = std::min(p.size(), q.size());
  const Vec a = order_subsample(sorted_copy(p), n);
  const Vec b = order_subsample(sorted_copy(q), n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += std::abs(a[i] - b[i]);
  return sum / static_cast<double>(n);
}

double ks_statistic(std::span<const double> p, std::span<const double> q) {
  if (p.empty() || q.empty()) throw InsufficientData("ks_statistic: empty sample set");
  const Vec a = sorted_copy(p), b = sorted_copy(q);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_statistic(std::span<const double> p, const std::function<double(double)>& cdf) {
  if (p.empty()) throw InsufficientData("ks_statistic: empty sample set");
  const Vec a = sorted_copy(p);
  const double n = static_cast<double>(a.size());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double f = cdf(a[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return std::clamp(d, 0.0, 1.0);
}

void MetricReport::add(std::string name, double value, std::optional<double> tolerance,
                       bool pass) {
  for (const auto& r : rows_)
    if (r.name == name) throw ConfigError("duplicate metric name: " + name);
  rows_.push_back({std::move(name), value, tolerance, pass});
}

bool MetricReport::all_pass() const {
  return std::all_of(rows_.begin(), rows_.end(), [](const MetricRow& r) { return r.pass; });
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string MetricReport::to_csv() const {
  std::ostringstream os;
  os << "metric,value,tolerance,pass\n";
  for (const auto& r : rows_) {
    os << r.name << ',' << format_double(r.value) << ',';
    if (r.tolerance) os << format_double(*r.tolerance);
    os << ',' << (r.pass ? "true" : "false") << '\n';
  }
  return os.str();
}

}  // namespace mdm
