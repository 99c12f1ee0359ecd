#include "nci/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>
#include <vector>

#include "nci/error.hpp"
#include "nci/rng.hpp"
#include "nci/stats.hpp"

namespace nci {

namespace {

// Counts pairs i < j with values[i] > values[j] (strict) by merge sort.
std::uint64_t count_inversions(std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<double> buffer(n);
  std::uint64_t inversions = 0;
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo + width < n; lo += 2 * width) {
      const std::size_t mid = lo + width;
      const std::size_t hi = std::min(lo + 2 * width, n);
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (values[i] <= values[j]) {
          buffer[k++] = values[i++];
        } else {
          inversions += mid - i;
          buffer[k++] = values[j++];
        }
      }
      while (i < mid) buffer[k++] = values[i++];
      while (j < hi) buffer[k++] = values[j++];
      std::copy(buffer.begin() + static_cast<std::ptrdiff_t>(lo),
                buffer.begin() + static_cast<std::ptrdiff_t>(hi),
                values.begin() + static_cast<std::ptrdiff_t>(lo));
    }
  }
  return inversions;
}

std::uint64_t tie_pair_count(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::uint64_t ties = 0;
  std::size_t run = 1;
  for (std::size_t i = 1; i <= values.size(); ++i) {
    if (i < values.size() && values[i] == values[i - 1]) {
      ++run;
    } else {
      ties += static_cast<std::uint64_t>(run) * (run - 1) / 2;
      run = 1;
    }
  }
  return ties;
}

struct PairSample {
  std::vector<std::pair<int, int>> pairs;
};

PairSample sample_pairs(int n, bool symmetric, std::size_t pair_sample, std::uint64_t seed) {
  PairSample out;
  const std::uint64_t universe = symmetric
                                     ? static_cast<std::uint64_t>(n) * (n - 1) / 2
                                     : static_cast<std::uint64_t>(n) * (n - 1);
  if (universe <= pair_sample) {
    out.pairs.reserve(static_cast<std::size_t>(universe));
    for (int u = 0; u < n; ++u) {
      for (int v = symmetric ? u + 1 : 0; v < n; ++v) {
        if (u == v) continue;
        out.pairs.emplace_back(u, v);
      }
    }
    return out;
  }
  Rng rng = Rng::substream(seed, "pair-sample");
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(pair_sample * 2);
  out.pairs.reserve(pair_sample);
  while (out.pairs.size() < pair_sample) {
    int u = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(n)));
    int v = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(n)));
    if (u == v) continue;
    if (symmetric && u > v) std::swap(u, v);
    const std::uint64_t code = static_cast<std::uint64_t>(u) * static_cast<std::uint64_t>(n) + v;
    if (!seen.insert(code).second) continue;
    out.pairs.emplace_back(u, v);
  }
  return out;
}

double stable_log1pexp(double t) {
  // log(1 + exp(t)) without overflow.
  if (t > 35.0) return t;
  if (t < -35.0) return std::exp(t);
  return std::log1p(std::exp(t));
}

}  // namespace

double kendall_tau_b(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) fail(ErrorKind::Parameter, "kendall_tau_b needs equal-length sequences");
  const std::size_t m = xs.size();
  if (m < 2) fail(ErrorKind::Parameter, "kendall_tau_b needs at least two observations");

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (xs[a] != xs[b]) return xs[a] < xs[b];
    return ys[a] < ys[b];
  });

  const std::uint64_t n0 = static_cast<std::uint64_t>(m) * (m - 1) / 2;
  std::uint64_t x_ties = 0, joint_ties = 0;
  {
    std::size_t run_x = 1, run_xy = 1;
    for (std::size_t i = 1; i <= m; ++i) {
      const bool same_x = i < m && xs[order[i]] == xs[order[i - 1]];
      const bool same_xy = same_x && ys[order[i]] == ys[order[i - 1]];
      if (same_x) {
        ++run_x;
      } else {
        x_ties += static_cast<std::uint64_t>(run_x) * (run_x - 1) / 2;
        run_x = 1;
      }
      if (same_xy) {
        ++run_xy;
      } else {
        joint_ties += static_cast<std::uint64_t>(run_xy) * (run_xy - 1) / 2;
        run_xy = 1;
      }
    }
  }

  std::vector<double> y_sequence(m);
  for (std::size_t i = 0; i < m; ++i) y_sequence[i] = ys[order[i]];
  const std::uint64_t discordant = count_inversions(y_sequence);
  const std::uint64_t y_ties = tie_pair_count(std::vector<double>(ys.begin(), ys.end()));

  const double x_denominator = static_cast<double>(n0 - x_ties);
  const double y_denominator = static_cast<double>(n0 - y_ties);
  if (x_denominator == 0.0 && y_denominator == 0.0) {
    fail(ErrorKind::UndefinedCorrelation, "kendall tau undefined: both sequences are constant");
  }
  if (x_denominator == 0.0 || y_denominator == 0.0) return 0.0;

  const double con_minus_dis = static_cast<double>(n0) - static_cast<double>(x_ties) -
                               static_cast<double>(y_ties) + static_cast<double>(joint_ties) -
                               2.0 * static_cast<double>(discordant);
  return con_minus_dis / (std::sqrt(x_denominator) * std::sqrt(y_denominator));
}

double kendall_tau_score(const EmbeddingMatrix& z, const SimilarityMatrix& s,
                         std::size_t pair_sample, std::uint64_t seed) {
  if (s.size() < 2) fail(ErrorKind::Parameter, "kendall_tau_score needs at least two nodes");
  if (z.rows() != s.size()) fail(ErrorKind::Validation, "embedding and similarity sizes differ");
  const EmbeddingMatrix normalized = z.normalized ? z : normalize_rows(z);

  const PairSample sample = sample_pairs(s.size(), s.symmetric(), pair_sample, seed);
  std::vector<double> similarities(sample.pairs.size());
  std::vector<double> proximities(sample.pairs.size());
  for (std::size_t i = 0; i < sample.pairs.size(); ++i) {
    const auto [u, v] = sample.pairs[i];
    similarities[i] = s.value(u, v);
    proximities[i] = -pairwise_distance(normalized, u, v);
  }
  return kendall_tau_b(similarities, proximities);
}

double property_classification_score(const EmbeddingMatrix& z, const SimilarityMatrix& s,
                                     const CoherenceParams& p) {
  return property_classification_score(z, s, p, PropertyClassOptions{});
}

double property_classification_score(const EmbeddingMatrix& z, const SimilarityMatrix& s,
                                     const CoherenceParams& p, const PropertyClassOptions& options) {
  p.validate();
  if (z.rows() != s.size()) fail(ErrorKind::Validation, "embedding and similarity sizes differ");
  const EmbeddingMatrix normalized = z.normalized ? z : normalize_rows(z);
  const int n = s.size();

  // Candidate pairs from the same similar/intruder construction the
  // coherence rates use; positives are (u, v_similar), negatives
  // (u, v_intruder), with u drawn from the configured query set.
  std::vector<std::pair<int, int>> positives;
  std::vector<std::pair<int, int>> negatives;
  for (int u : coherence_query_set(n, p)) {
    const auto row = s.positive_row(u);
    if (row.empty()) continue;
    std::vector<double> values;
    values.reserve(row.size());
    for (const auto& [v, sv] : row) values.push_back(sv);
    std::sort(values.begin(), values.end());
    const double eta_s = percentile_sorted(values, p.eta_s_percentile);
    const double eta_i = percentile_sorted(values, p.eta_i_percentile);

    std::vector<bool> above_eta_i(static_cast<std::size_t>(n), false);
    for (const auto& [v, sv] : row) {
      if (sv >= eta_s) positives.emplace_back(u, v);
      if (sv >= eta_i) above_eta_i[static_cast<std::size_t>(v)] = true;
    }
    for (int v = 0; v < n; ++v) {
      if (v == u || above_eta_i[static_cast<std::size_t>(v)]) continue;
      negatives.emplace_back(u, v);
    }
  }

  Rng rng = Rng::substream(p.seed, std::string("property-class:") + s.spec().name());
  auto downsample = [&](std::vector<std::pair<int, int>>& pairs, std::size_t target) {
    if (pairs.size() <= target) return;
    const auto keep = sample_without_replacement(static_cast<int>(pairs.size()),
                                                 static_cast<int>(target), rng);
    std::vector<std::pair<int, int>> kept;
    kept.reserve(target);
    for (int idx : keep) kept.push_back(pairs[static_cast<std::size_t>(idx)]);
    pairs = std::move(kept);
  };

  const std::size_t per_class =
      std::min({positives.size(), negatives.size(), options.max_pairs_per_class});
  if (per_class < options.min_pairs_per_class) {
    fail(ErrorKind::InsufficientData,
         "property classification needs at least " + std::to_string(options.min_pairs_per_class) +
             " pairs per class for relation '" + s.spec().name() + "'");
  }
  downsample(positives, per_class);
  downsample(negatives, per_class);

  const int d = normalized.dim();
  const int feature_dim = 2 * d;
  const std::size_t total = 2 * per_class;
  Eigen::MatrixXd features(static_cast<Eigen::Index>(total), feature_dim);
  Eigen::VectorXd labels(static_cast<Eigen::Index>(total));
  auto fill = [&](const std::vector<std::pair<int, int>>& pairs, std::size_t offset, double label) {
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto [u, v] = pairs[i];
      const auto zu = normalized.values.row(u);
      const auto zv = normalized.values.row(v);
      features.row(static_cast<Eigen::Index>(offset + i)).head(d) = (zu - zv).cwiseAbs();
      features.row(static_cast<Eigen::Index>(offset + i)).tail(d) = zu.cwiseProduct(zv);
      labels(static_cast<Eigen::Index>(offset + i)) = label;
    }
  };
  fill(positives, 0, 1.0);
  fill(negatives, per_class, -1.0);

  std::vector<int> order(total);
  std::iota(order.begin(), order.end(), 0);
  shuffle_in_place(order, rng);
  const std::size_t train_count =
      std::max<std::size_t>(1, std::min(total - 1, static_cast<std::size_t>(
                                                       std::llround(options.train_fraction * total))));

  Eigen::MatrixXd train_x(static_cast<Eigen::Index>(train_count), feature_dim);
  Eigen::VectorXd train_y(static_cast<Eigen::Index>(train_count));
  for (std::size_t i = 0; i < train_count; ++i) {
    train_x.row(static_cast<Eigen::Index>(i)) = features.row(order[i]);
    train_y(static_cast<Eigen::Index>(i)) = labels(order[i]);
  }

  // Logistic objective with L2 penalty on weights (bias unpenalized),
  // minimized by Nesterov-accelerated gradient descent with backtracking.
  const double lambda = options.l2_penalty;
  const double inv_n = 1.0 / static_cast<double>(train_count);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(feature_dim);
  double b = 0.0;

  auto objective = [&](const Eigen::VectorXd& weights, double bias) {
    const Eigen::ArrayXd scores = (train_x * weights).array() + bias;
    const Eigen::ArrayXd margins = -(train_y.array() * scores);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < margins.size(); ++i) loss += stable_log1pexp(margins(i));
    return loss * inv_n + 0.5 * lambda * weights.squaredNorm();
  };
  auto gradient = [&](const Eigen::VectorXd& weights, double bias, Eigen::VectorXd& gw, double& gb) {
    const Eigen::ArrayXd scores = (train_x * weights).array() + bias;
    const Eigen::ArrayXd sig = 1.0 / (1.0 + (train_y.array() * scores).exp());
    const Eigen::VectorXd coef = (-train_y.array() * sig).matrix() * inv_n;
    gw = train_x.transpose() * coef + lambda * weights;
    gb = coef.sum();
  };

  Eigen::VectorXd momentum_w = w;
  double momentum_b = b;
  double step = 1.0;
  double t_prev = 1.0;
  Eigen::VectorXd gw(feature_dim);
  double gb = 0.0;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    gradient(momentum_w, momentum_b, gw, gb);
    const double grad_norm = std::max(gw.cwiseAbs().maxCoeff(), std::abs(gb));
    if (grad_norm <= options.tolerance) break;

    const double f0 = objective(momentum_w, momentum_b);
    const double slope = gw.squaredNorm() + gb * gb;
    Eigen::VectorXd next_w;
    double next_b = 0.0;
    for (;;) {
      next_w = momentum_w - step * gw;
      next_b = momentum_b - step * gb;
      if (objective(next_w, next_b) <= f0 - 0.5 * step * slope || step < 1e-12) break;
      step *= 0.5;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_prev * t_prev));
    const double beta = (t_prev - 1.0) / t_next;
    momentum_w = next_w + beta * (next_w - w);
    momentum_b = next_b + beta * (next_b - b);
    w = next_w;
    b = next_b;
    t_prev = t_next;
    step *= 2.0;  // allow the step to grow back after backtracking
  }

  std::size_t correct = 0;
  std::size_t tested = 0;
  for (std::size_t i = train_count; i < total; ++i) {
    const double score = features.row(order[i]).dot(w) + b;
    const double predicted = score >= 0.0 ? 1.0 : -1.0;
    if (predicted == labels(order[i])) ++correct;
    ++tested;
  }
  return static_cast<double>(correct) / static_cast<double>(tested);
}

}  // namespace nci
