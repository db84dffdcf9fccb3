#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace selfendorse {

using Vector = std::vector<double>;

/// L2-normalized term-frequency vectors over the sorted union vocabulary of
/// the tokenized texts. A text without tokens maps to the zero vector.
std::vector<Vector> bag_of_words(const std::vector<std::string>& texts);

double squared_distance(const Vector& a, const Vector& b) noexcept;

struct KMeansOptions {
    int max_iterations = 100;
    /// Independent seeded starts; the lowest within-cluster sum of squares wins.
    int restarts = 10;
};

struct KMeansResult {
    std::vector<int> assignment;  // cluster id per point
    std::vector<Vector> centroids;
    double inertia = 0.0;         // within-cluster sum of squared distances
    int iterations = 0;
};

/// Lloyd's algorithm with farthest-first seeding: the first centre of start r
/// is a seed-derived point, each further centre is the point farthest from
/// the centres chosen so far (ties: lowest index). A cluster that empties is
/// re-seeded at the point farthest from its own centroid. With at most 8
/// points every partition is also enumerated and the exact optimum kept
/// when it beats the restarts. Pure function of
/// (points, k, seed, options). Requires 1 <= k <= points.size().
KMeansResult kmeans(const std::vector<Vector>& points, int k, std::uint64_t seed, const KMeansOptions& options = {});

/// Within-cluster sum of squares of an assignment, using each cluster's mean.
double partition_inertia(const std::vector<Vector>& points, const std::vector<int>& assignment);

/// splitmix64 step; the deterministic generator behind seeded choices.
std::uint64_t splitmix64(std::uint64_t& state) noexcept;

}  // namespace selfendorse
