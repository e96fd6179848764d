#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "cellflow/analysis.hpp"
#include "cellflow/error.hpp"
#include "cellflow/kernels.hpp"
#include "cellflow/rng.hpp"
#include "cellflow/textio.hpp"

namespace cellflow {
namespace {

using Points = std::vector<std::vector<double>>;

std::vector<std::vector<double>> seed_centroids(const Points& points, std::size_t k, Rng& rng) {
  const std::size_t n = points.size();
  std::vector<std::vector<double>> centroids;
  centroids.reserve(k);
  centroids.push_back(points[rng.below(n)]);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], kernels::sq_dist(points[i], centroids.back()));
      total += d2[i];
    }
    std::size_t pick = n - 1;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (d2[i] > 0.0 && acc > target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(n);
    }
    centroids.push_back(points[pick]);
  }
  return centroids;
}

// Nearest-centroid assignment; returns the inertia.
double assign(const Points& points, const std::vector<std::vector<double>>& centroids,
              std::vector<std::size_t>& assignments) {
  double inertia = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::size_t best = 0;
    double best_d = kernels::sq_dist(points[i], centroids[0]);
    for (std::size_t c = 1; c < centroids.size(); ++c) {
      const double d = kernels::sq_dist(points[i], centroids[c]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    assignments[i] = best;
    inertia += best_d;
  }
  return inertia;
}

double inertia_of(const Points& points, const std::vector<std::vector<double>>& centroids,
                  const std::vector<std::size_t>& assignments) {
  double inertia = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    inertia += kernels::sq_dist(points[i], centroids[assignments[i]]);
  }
  return inertia;
}

// Moves every non-empty centroid to the mean of its points; returns the
// cluster sizes.
std::vector<std::size_t> update_means(const Points& points, const std::vector<std::size_t>& assignments,
                                      std::vector<std::vector<double>>& centroids) {
  const std::size_t dim = points.front().size();
  std::vector<std::vector<double>> sums(centroids.size(), std::vector<double>(dim, 0.0));
  std::vector<std::size_t> sizes(centroids.size(), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    kernels::axpy(1.0, points[i], sums[assignments[i]]);
    ++sizes[assignments[i]];
  }
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    if (sizes[c] == 0) continue;
    for (std::size_t d = 0; d < dim; ++d) centroids[c][d] = sums[c][d] / static_cast<double>(sizes[c]);
  }
  return sizes;
}

void reseed_empty(const Points& points, std::vector<std::size_t>& assignments,
                  std::vector<std::vector<double>>& centroids, std::vector<std::size_t>& sizes) {
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    if (sizes[c] != 0) continue;
    std::size_t far = points.size();
    double far_d = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (sizes[assignments[i]] < 2) continue;
      const double d = kernels::sq_dist(points[i], centroids[assignments[i]]);
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    if (far == points.size()) continue;  // every point sits on its centroid
    --sizes[assignments[far]];
    assignments[far] = c;
    sizes[c] = 1;
    centroids[c] = points[far];
  }
}

// Hartigan single-point transfers: moves a point whenever doing so lowers the
// inertia, updating both means in place. Returns true if anything moved.
bool transfer_pass(const Points& points, std::vector<std::size_t>& assignments,
                   std::vector<std::vector<double>>& centroids) {
  const std::size_t dim = points.front().size();
  std::vector<std::size_t> sizes(centroids.size(), 0);
  for (std::size_t a : assignments) ++sizes[a];
  bool moved = false;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::size_t from = assignments[i];
    if (sizes[from] < 2) continue;
    const double n_from = static_cast<double>(sizes[from]);
    const double removal = n_from / (n_from - 1.0) * kernels::sq_dist(points[i], centroids[from]);
    std::size_t to = from;
    double best_gain = 0.0;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      if (c == from) continue;
      const double n_to = static_cast<double>(sizes[c]);
      const double addition = n_to / (n_to + 1.0) * kernels::sq_dist(points[i], centroids[c]);
      // relative margin keeps rounding noise from cycling points back and forth
      const double gain = removal - addition;
      if (gain > best_gain && gain > 1e-12 * removal) {
        best_gain = gain;
        to = c;
      }
    }
    if (to == from) continue;
    const double n_to = static_cast<double>(sizes[to]);
    for (std::size_t d = 0; d < dim; ++d) {
      centroids[from][d] = (centroids[from][d] * n_from - points[i][d]) / (n_from - 1.0);
      centroids[to][d] = (centroids[to][d] * n_to + points[i][d]) / (n_to + 1.0);
    }
    --sizes[from];
    ++sizes[to];
    assignments[i] = to;
    moved = true;
  }
  return moved;
}

ClusterResult lloyd(const Points& points, std::size_t k, std::size_t max_iter, Rng& rng) {
  ClusterResult r;
  r.k = k;
  r.centroids = seed_centroids(points, k, rng);
  r.assignments.assign(points.size(), 0);
  r.inertia_history.push_back(assign(points, r.centroids, r.assignments));

  std::vector<std::size_t> next(points.size());
  for (std::size_t iter = 1; iter <= max_iter; ++iter) {
    auto sizes = update_means(points, r.assignments, r.centroids);
    reseed_empty(points, r.assignments, r.centroids, sizes);
    const double inertia = assign(points, r.centroids, next);
    r.inertia_history.push_back(inertia);
    r.iterations = iter;
    const bool changed = next != r.assignments;
    r.assignments.swap(next);
    if (!changed) break;
  }
  update_means(points, r.assignments, r.centroids);
  r.inertia = inertia_of(points, r.centroids, r.assignments);
  if (r.inertia < r.inertia_history.back()) r.inertia_history.push_back(r.inertia);

  // Lloyd's fixed points can still admit an improving single-point move.
  for (std::size_t pass = 0; pass < max_iter; ++pass) {
    auto assignments = r.assignments;
    auto centroids = r.centroids;
    if (!transfer_pass(points, assignments, centroids)) break;
    update_means(points, assignments, centroids);
    const double inertia = inertia_of(points, centroids, assignments);
    if (inertia >= r.inertia) break;
    r.assignments = std::move(assignments);
    r.centroids = std::move(centroids);
    r.inertia = inertia;
    r.inertia_history.push_back(inertia);
  }
  return r;
}

}  // namespace

ClusterResult kmeans(const Points& points, const KMeansOptions& options) {
  if (options.k == 0) throw Error("k-means needs k >= 1");
  if (points.size() < options.k) {
    throw Error("k-means with k=" + std::to_string(options.k) + " needs at least that many points, got " +
                std::to_string(points.size()));
  }
  const std::size_t dim = points.front().size();
  if (dim == 0) throw ShapeError("k-means points have no coordinates");
  for (const auto& p : points) {
    if (p.size() != dim) throw ShapeError("k-means points differ in dimension");
    for (double v : p) {
      if (!std::isfinite(v)) throw NumericError("k-means point has a non-finite coordinate");
    }
  }
  if (options.max_iter == 0) throw Error("k-means max_iter must be positive");

  const std::size_t restarts = std::max<std::size_t>(options.restarts, 1);
  ClusterResult best;
  for (std::size_t run = 0; run < restarts; ++run) {
    Rng rng(derive_seed(options.seed, run));
    ClusterResult r = lloyd(points, options.k, options.max_iter, rng);
    if (run == 0 || r.inertia < best.inertia) best = std::move(r);
  }
  return best;
}

const std::vector<std::vector<std::string>>& cluster_feature_subsets() {
  static const std::vector<std::vector<std::string>> subsets{
      {"uplink_count", "downlink_count"},
      {"uplink_count", "downlink_count", "ud_ratio"},
  };
  return subsets;
}

std::vector<std::vector<double>> cluster_points(std::span<const BinnedSample> bins,
                                                const std::vector<std::string>& features) {
  std::vector<std::vector<double>> points;
  for (const BinnedSample& b : bins) {
    if (b.is_padding) continue;
    std::vector<double> p;
    p.reserve(features.size());
    for (const std::string& f : features) p.push_back(feature_value(b, f));
    points.push_back(std::move(p));
  }
  return points;
}

std::vector<GridCell> cluster_grid(std::span<const BinSeries> series, const KMeansOptions& options,
                                   const std::vector<std::vector<std::string>>& subsets) {
  std::vector<GridCell> cells;
  std::size_t index = 0;
  for (const BinSeries& s : series) {
    for (const auto& subset : subsets) {
      GridCell cell{s.bin_size, subset, std::nullopt, {}};
      const auto points = cluster_points(s.bins, subset);
      if (points.size() < options.k) {
        cell.skip_reason = "only " + std::to_string(points.size()) + " non-padding bins for k=" +
                           std::to_string(options.k);
      } else {
        KMeansOptions cell_options = options;
        cell_options.seed = derive_seed(options.seed, index);
        ClusterResult r = kmeans(points, cell_options);
        r.feature_subset = subset;
        r.bin_size = s.bin_size;
        cell.result = std::move(r);
      }
      cells.push_back(std::move(cell));
      ++index;
    }
  }
  return cells;
}

void write_assignments(std::ostream& out, const ClusterResult& result, const Points& points) {
  out << "point,cluster";
  for (const auto& f : result.feature_subset) out << ',' << f;
  out << '\n';
  for (std::size_t i = 0; i < points.size(); ++i) {
    out << i << ',' << result.assignments.at(i);
    for (double v : points[i]) out << ',' << textio::format_double(v);
    out << '\n';
  }
}

void write_centroids(std::ostream& out, const ClusterResult& result) {
  std::vector<std::size_t> sizes(result.k, 0);
  for (std::size_t a : result.assignments) ++sizes[a];
  out << "cluster,size";
  for (const auto& f : result.feature_subset) out << ',' << f;
  out << '\n';
  for (std::size_t c = 0; c < result.k; ++c) {
    out << c << ',' << sizes[c];
    for (double v : result.centroids[c]) out << ',' << textio::format_double(v);
    out << '\n';
  }
}

}  // namespace cellflow
