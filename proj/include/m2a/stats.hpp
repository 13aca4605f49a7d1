#pragma once

#include "m2a/common.hpp"
#include "m2a/matrix.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace m2a {

/// One listener judgement on a 1..5 quality scale.
struct RatingRecord {
  std::string listener_id;
  std::string system_id;
  std::string sample_id;
  int score = 0;

  bool operator==(const RatingRecord&) const = default;
};

/// CSV with header listener_id,system_id,sample_id,score.
inline std::vector<RatingRecord> read_ratings_csv(std::istream& in)
{
  std::string line;
  if (!std::getline(in, line)) throw InputError("ratings: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "listener_id,system_id,sample_id,score")
    throw InputError("ratings: unexpected header: " + line);

  std::vector<RatingRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    RatingRecord r;
    std::string score;
    if (!std::getline(ss, r.listener_id, ',') || !std::getline(ss, r.system_id, ',') ||
        !std::getline(ss, r.sample_id, ',') || !std::getline(ss, score))
      throw InputError("ratings: malformed row at line " + std::to_string(lineno));
    try {
      r.score = std::stoi(score);
    } catch (const std::exception&) {
      throw InputError("ratings: non-integer score at line " + std::to_string(lineno));
    }
    if (r.score < 1 || r.score > 5)
      throw InputError("ratings: score outside 1..5 at line " + std::to_string(lineno));
    out.push_back(std::move(r));
  }
  return out;
}

struct MosAggregate {
  double mean = 0.0;
  std::size_t count = 0;
};

/// Arithmetic mean of scores per system.
inline std::map<std::string, MosAggregate> aggregate_mos(const std::vector<RatingRecord>& records)
{
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const RatingRecord& r : records) {
    auto& [sum, n] = acc[r.system_id];
    sum += static_cast<double>(r.score);
    ++n;
  }
  std::map<std::string, MosAggregate> out;
  for (const auto& [id, sn] : acc) out[id] = {sn.first / static_cast<double>(sn.second), sn.second};
  return out;
}

// ---------------------------------------------------------------------------
// Mann-Whitney U test
// ---------------------------------------------------------------------------

struct MannWhitneyResult {
  double u = 0.0;
  double p = 1.0;
  bool exact = false;
};

namespace detail {

/// Twice the U statistic as an integer: 2 per x>y pair, 1 per tie.
inline long long u_doubled(const std::vector<double>& xs, const std::vector<double>& ys)
{
  long long u2 = 0;
  for (double x : xs)
    for (double y : ys) {
      if (x > y)
        u2 += 2;
      else if (x == y)
        u2 += 1;
    }
  return u2;
}

/// Exact two-sided p by enumerating every split of the pooled sample,
/// p = min(1, 2 min(P(U <= u), P(U >= u))).
inline double exact_two_sided_p(const std::vector<double>& xs, const std::vector<double>& ys)
{
  const std::size_t nx = xs.size(), n = xs.size() + ys.size();
  std::vector<double> pooled(xs);
  pooled.insert(pooled.end(), ys.begin(), ys.end());
  std::sort(pooled.begin(), pooled.end());

  const long long u2_obs = u_doubled(xs, ys);

  std::vector<std::size_t> idx(nx);
  for (std::size_t i = 0; i < nx; ++i) idx[i] = i;
  long long le = 0, ge = 0, total = 0;
  std::vector<double> px(nx), py(n - nx);
  while (true) {
    std::size_t xi = 0, yi = 0;
    for (std::size_t i = 0, j = 0; i < n; ++i) {
      if (j < nx && idx[j] == i) {
        px[xi++] = pooled[i];
        ++j;
      } else {
        py[yi++] = pooled[i];
      }
    }
    const long long u2 = u_doubled(px, py);
    if (u2 <= u2_obs) ++le;
    if (u2 >= u2_obs) ++ge;
    ++total;

    // next combination
    std::size_t k = nx;
    while (k > 0 && idx[k - 1] == n - nx + k - 1) --k;
    if (k == 0) break;
    ++idx[k - 1];
    for (std::size_t j = k; j < nx; ++j) idx[j] = idx[j - 1] + 1;
  }
  const double lo = static_cast<double>(le) / static_cast<double>(total);
  const double hi = static_cast<double>(ge) / static_cast<double>(total);
  return std::min(1.0, 2.0 * std::min(lo, hi));
}

/// Normal approximation with tie-corrected variance and 0.5 continuity
/// correction. tie_sum is sum(t^3 - t) over pooled tie groups.
inline double normal_two_sided_p(double u, std::size_t nx, std::size_t ny, double tie_sum)
{
  const double dnx = static_cast<double>(nx), dny = static_cast<double>(ny);
  const double n = dnx + dny;
  const double mu = dnx * dny / 2.0;
  const double var = dnx * dny / 12.0 * ((n + 1.0) - tie_sum / (n * (n - 1.0)));
  if (var <= 0.0) return 1.0; // all values tied
  const double d = std::abs(u - mu);
  const double z = std::max(0.0, d - 0.5) / std::sqrt(var);
  const double p = std::erfc(z / std::sqrt(2.0));
  return std::min(1.0, std::max(p, std::numeric_limits<double>::min()));
}

inline double tie_sum(const std::vector<double>& xs, const std::vector<double>& ys)
{
  std::vector<double> pooled(xs);
  pooled.insert(pooled.end(), ys.begin(), ys.end());
  std::sort(pooled.begin(), pooled.end());
  double sum = 0.0;
  std::size_t i = 0;
  while (i < pooled.size()) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j] == pooled[i]) ++j;
    const double t = static_cast<double>(j - i);
    sum += t * t * t - t;
    i = j;
  }
  return sum;
}

} // namespace detail

inline constexpr std::size_t kExactEnumerationLimit = 20;

/// Two-sided Mann-Whitney U test. Exact enumeration when the pooled size is
/// at most kExactEnumerationLimit, otherwise the tie-corrected normal
/// approximation with continuity correction.
inline MannWhitneyResult mann_whitney_u(const std::vector<double>& xs,
                                        const std::vector<double>& ys)
{
  if (xs.empty() || ys.empty()) throw InputError("mann_whitney_u: empty sample");
  MannWhitneyResult r;
  r.u = static_cast<double>(detail::u_doubled(xs, ys)) / 2.0;
  if (xs.size() + ys.size() <= kExactEnumerationLimit) {
    r.exact = true;
    r.p = detail::exact_two_sided_p(xs, ys);
  } else {
    r.exact = false;
    r.p = detail::normal_two_sided_p(r.u, xs.size(), ys.size(), detail::tie_sum(xs, ys));
  }
  return r;
}

/// Holm's step-down procedure; returns per-hypothesis rejection in the input
/// order.
inline std::vector<bool> holm_bonferroni(const std::vector<double>& pvals, double alpha)
{
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("holm_bonferroni: alpha must be in (0,1)");
  for (double p : pvals)
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("holm_bonferroni: p-value outside [0,1]");

  const std::size_t m = pvals.size();
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pvals[a] < pvals[b]; });

  std::vector<bool> rejected(m, false);
  for (std::size_t i = 0; i < m; ++i) {
    const double threshold = alpha / static_cast<double>(m - i);
    if (pvals[order[i]] <= threshold)
      rejected[order[i]] = true;
    else
      break; // step-down stops at the first failure
  }
  return rejected;
}

/// Pairwise Mann-Whitney outcomes with joint Holm-Bonferroni correction.
struct SignificanceMatrix {
  std::vector<std::string> systems; // sorted
  Matrix raw_p;                     // symmetric, diagonal 1
  std::vector<std::vector<bool>> rejected;
  double alpha = 0.05;
};

/// Each individual rating is one observation unless per_sample_means is set,
/// in which case ratings are first averaged per (system, sample).
inline SignificanceMatrix significance_matrix(const std::vector<RatingRecord>& records,
                                              double alpha, bool per_sample_means = false)
{
  std::map<std::string, std::vector<double>> scores;
  if (per_sample_means) {
    std::map<std::pair<std::string, std::string>, std::pair<double, std::size_t>> acc;
    for (const RatingRecord& r : records) {
      auto& [sum, n] = acc[{r.system_id, r.sample_id}];
      sum += static_cast<double>(r.score);
      ++n;
    }
    for (const auto& [key, sn] : acc)
      scores[key.first].push_back(sn.first / static_cast<double>(sn.second));
  } else {
    for (const RatingRecord& r : records)
      scores[r.system_id].push_back(static_cast<double>(r.score));
  }
  if (scores.size() < 2) throw InputError("significance_matrix: need at least 2 systems");

  SignificanceMatrix out;
  out.alpha = alpha;
  for (const auto& [id, _] : scores) out.systems.push_back(id);
  const std::size_t m = out.systems.size();
  out.raw_p = Matrix(m, m, 1.0);
  out.rejected.assign(m, std::vector<bool>(m, false));

  std::vector<double> pvals;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b) {
      const auto res = mann_whitney_u(scores[out.systems[a]], scores[out.systems[b]]);
      out.raw_p(a, b) = out.raw_p(b, a) = res.p;
      pvals.push_back(res.p);
      pairs.push_back({a, b});
    }
  const std::vector<bool> rej = holm_bonferroni(pvals, alpha);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out.rejected[pairs[i].first][pairs[i].second] = rej[i];
    out.rejected[pairs[i].second][pairs[i].first] = rej[i];
  }
  return out;
}

} // namespace m2a
