#include "selfendorse/kmeans.hpp"

#include "selfendorse/errors.hpp"
#include "selfendorse/text.hpp"

#include <cmath>
#include <limits>
#include <map>

namespace selfendorse {

std::uint64_t splitmix64(std::uint64_t& state) noexcept
{
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::vector<Vector> bag_of_words(const std::vector<std::string>& texts)
{
    std::vector<std::vector<std::string>> tokens;
    std::map<std::string, std::size_t> vocab;
    tokens.reserve(texts.size());
    for (const auto& text : texts) {
        tokens.push_back(tokenize(text));
        for (const auto& t : tokens.back()) vocab.emplace(t, 0);
    }
    std::size_t next = 0;
    for (auto& entry : vocab) entry.second = next++;

    std::vector<Vector> vectors;
    vectors.reserve(texts.size());
    for (const auto& toks : tokens) {
        Vector v(vocab.size(), 0.0);
        for (const auto& t : toks) v[vocab.at(t)] += 1.0;
        double norm = 0.0;
        for (double x : v) norm += x * x;
        if (norm > 0.0) {
            norm = std::sqrt(norm);
            for (double& x : v) x /= norm;
        }
        vectors.push_back(std::move(v));
    }
    return vectors;
}

double squared_distance(const Vector& a, const Vector& b) noexcept
{
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        total += d * d;
    }
    return total;
}

namespace {

constexpr std::size_t kExactSearchLimit = 8;

std::vector<Vector> means(const std::vector<Vector>& points, const std::vector<int>& assignment, int k)
{
    const std::size_t dims = points.empty() ? 0 : points.front().size();
    std::vector<Vector> centroids(static_cast<std::size_t>(k), Vector(dims, 0.0));
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto c = static_cast<std::size_t>(assignment[i]);
        ++counts[c];
        for (std::size_t d = 0; d < dims; ++d) centroids[c][d] += points[i][d];
    }
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        if (counts[c] == 0) continue;
        for (double& x : centroids[c]) x /= counts[c];
    }
    return centroids;
}

KMeansResult lloyd(const std::vector<Vector>& points, int k, std::size_t first, int max_iterations)
{
    const std::size_t n = points.size();
    std::vector<Vector> centroids{points[first]};
    std::vector<double> nearest(n);
    for (std::size_t i = 0; i < n; ++i) nearest[i] = squared_distance(points[i], centroids[0]);
    while (static_cast<int>(centroids.size()) < k) {
        std::size_t far = 0;
        for (std::size_t i = 1; i < n; ++i) {
            if (nearest[i] > nearest[far]) far = i;
        }
        centroids.push_back(points[far]);
        for (std::size_t i = 0; i < n; ++i) {
            nearest[i] = std::min(nearest[i], squared_distance(points[i], centroids.back()));
        }
    }

    KMeansResult result;
    std::vector<int> previous;
    for (int iter = 1; iter <= std::max(1, max_iterations); ++iter) {
        result.iterations = iter;
        std::vector<int> assignment(n, 0);
        std::vector<int> sizes(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double d = squared_distance(points[i], centroids[static_cast<std::size_t>(c)]);
                if (d < best) {
                    best = d;
                    assignment[i] = c;
                }
            }
            ++sizes[static_cast<std::size_t>(assignment[i])];
        }
        for (int c = 0; c < k; ++c) {
            if (sizes[static_cast<std::size_t>(c)] > 0) continue;
            // Re-seed at the point farthest from its centroid, taken from a cluster that can spare it.
            std::size_t far = n;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                const auto own = static_cast<std::size_t>(assignment[i]);
                if (sizes[own] < 2) continue;
                const double d = squared_distance(points[i], centroids[own]);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            if (far == n) break;
            --sizes[static_cast<std::size_t>(assignment[far])];
            assignment[far] = c;
            ++sizes[static_cast<std::size_t>(c)];
        }
        centroids = means(points, assignment, k);
        const bool converged = assignment == previous;
        previous = std::move(assignment);
        if (converged) break;
    }
    result.assignment = std::move(previous);
    result.centroids = std::move(centroids);
    result.inertia = partition_inertia(points, result.assignment);
    return result;
}

/// Lowest-inertia partition into exactly k groups, by enumerating
/// restricted growth strings. First found wins ties.
std::vector<int> best_partition(const std::vector<Vector>& points, int k)
{
    const std::size_t n = points.size();
    std::vector<int> labels(n, 0);
    std::vector<int> best;
    double best_inertia = std::numeric_limits<double>::infinity();
    auto visit = [&](auto&& self, std::size_t i, int used) -> void {
        if (i == n) {
            if (used != k) return;
            const double inertia = partition_inertia(points, labels);
            if (inertia < best_inertia - 1e-12) {
                best_inertia = inertia;
                best = labels;
            }
            return;
        }
        if (used + static_cast<int>(n - i) < k) return;
        for (int c = 0; c <= std::min(used, k - 1); ++c) {
            labels[i] = c;
            self(self, i + 1, std::max(used, c + 1));
        }
    };
    visit(visit, 0, 0);
    return best;
}

}  // namespace

double partition_inertia(const std::vector<Vector>& points, const std::vector<int>& assignment)
{
    int k = 0;
    for (int c : assignment) k = std::max(k, c + 1);
    const auto centroids = means(points, assignment, k);
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        total += squared_distance(points[i], centroids[static_cast<std::size_t>(assignment[i])]);
    }
    return total;
}

KMeansResult kmeans(const std::vector<Vector>& points, int k, std::uint64_t seed, const KMeansOptions& options)
{
    if (k < 1 || static_cast<std::size_t>(k) > points.size()) {
        throw PreconditionError("kmeans needs 1 <= k <= number of points");
    }
    const std::size_t n = points.size();
    std::uint64_t state = seed;
    const std::uint64_t base = splitmix64(state);
    const auto starts = std::max<std::size_t>(1, std::min<std::size_t>(n, static_cast<std::size_t>(options.restarts)));
    KMeansResult best;
    for (std::size_t r = 0; r < starts; ++r) {
        auto candidate = lloyd(points, k, static_cast<std::size_t>((base + r) % n), options.max_iterations);
        if (r == 0 || candidate.inertia < best.inertia - 1e-12) {
            best = std::move(candidate);
        }
    }
    // Lloyd can settle in a local minimum; small inputs are solved exactly.
    if (n <= kExactSearchLimit && k > 1 && k < static_cast<int>(n)) {
        auto exact = best_partition(points, k);
        const double inertia = partition_inertia(points, exact);
        if (inertia < best.inertia - 1e-12) {
            best.centroids = means(points, exact, k);
            best.assignment = std::move(exact);
            best.inertia = inertia;
        }
    }
    return best;
}

}  // namespace selfendorse
