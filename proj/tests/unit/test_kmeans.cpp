#include "selfendorse/errors.hpp"
#include "selfendorse/kmeans.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

using namespace selfendorse;

namespace {

/// Minimum within-cluster sum of squares over every partition of the points
/// into exactly k non-empty groups (restricted growth strings).
double exhaustive_best(const std::vector<Vector>& points, int k)
{
    const int n = static_cast<int>(points.size());
    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    double best = std::numeric_limits<double>::infinity();
    std::function<void(int, int)> rec = [&](int i, int used) {
        if (i == n) {
            if (used == k) best = std::min(best, partition_inertia(points, labels));
            return;
        }
        if (used + (n - i) < k) return;
        for (int c = 0; c <= std::min(used, k - 1); ++c) {
            labels[static_cast<std::size_t>(i)] = c;
            rec(i + 1, std::max(used, c + 1));
        }
    };
    rec(0, 0);
    return best;
}

const std::vector<std::string> kWords = {"ada", "born", "london", "paris", "wrote", "notes", "math", "poet"};

std::vector<std::string> random_facts(std::mt19937_64& rng, std::size_t n)
{
    std::vector<std::string> facts;
    for (std::size_t i = 0; i < n; ++i) {
        std::string text;
        const auto len = 1 + rng() % 4;
        for (std::size_t w = 0; w < len; ++w) text += kWords[rng() % kWords.size()] + " ";
        facts.push_back(text);
    }
    return facts;
}

}  // namespace

TEST(BagOfWords, NormalizedCountsOverSortedVocabulary)
{
    const auto v = bag_of_words({"b a a", "c", ""});
    ASSERT_EQ(v.size(), 3u);
    ASSERT_EQ(v[0].size(), 3u);  // a, b, c
    EXPECT_NEAR(v[0][0], 2 / std::sqrt(5.0), 1e-12);
    EXPECT_NEAR(v[0][1], 1 / std::sqrt(5.0), 1e-12);
    EXPECT_DOUBLE_EQ(v[0][2], 0.0);
    EXPECT_EQ(v[1], (Vector{0, 0, 1}));
    EXPECT_EQ(v[2], (Vector{0, 0, 0}));
}

TEST(KMeans, ReachesExhaustiveOptimumOnSmallFactSets)
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + rng() % 6;
        const auto points = bag_of_words(random_facts(rng, n));
        for (int k = 1; k <= static_cast<int>(n); ++k) {
            const auto result = kmeans(points, k, rng());
            EXPECT_LE(result.inertia, exhaustive_best(points, k) + 1e-9) << "trial " << trial << " k " << k;
            EXPECT_NEAR(result.inertia, partition_inertia(points, result.assignment), 1e-12);
        }
    }
}

TEST(KMeans, ReachesExhaustiveOptimumOnRandomPlanePoints)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + rng() % 5;
        std::vector<Vector> points;
        for (std::size_t i = 0; i < n; ++i) points.push_back({u(rng), u(rng)});
        for (int k = 1; k <= static_cast<int>(n); ++k) {
            EXPECT_LE(kmeans(points, k, static_cast<std::uint64_t>(trial)).inertia, exhaustive_best(points, k) + 1e-9)
                << "trial " << trial << " k " << k;
        }
    }
}

TEST(KMeans, EveryClusterNonEmptyAndDeterministic)
{
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        const auto points = bag_of_words(random_facts(rng, 12));
        const int k = 1 + static_cast<int>(rng() % 5);
        const auto a = kmeans(points, k, 17);
        const auto b = kmeans(points, k, 17);
        EXPECT_EQ(a.assignment, b.assignment);
        EXPECT_EQ(a.centroids, b.centroids);
        std::vector<int> sizes(static_cast<std::size_t>(k), 0);
        for (int c : a.assignment) ++sizes[static_cast<std::size_t>(c)];
        for (int s : sizes) EXPECT_GT(s, 0);
    }
}

TEST(KMeans, IdenticalPointsShareACluster)
{
    const std::vector<Vector> points = {{1, 0}, {1, 0}, {0, 1}, {0, 1}};
    const auto result = kmeans(points, 2, 0);
    EXPECT_EQ(result.assignment[0], result.assignment[1]);
    EXPECT_EQ(result.assignment[2], result.assignment[3]);
    EXPECT_NE(result.assignment[0], result.assignment[2]);
    EXPECT_DOUBLE_EQ(result.inertia, 0.0);
}

TEST(KMeans, RejectsBadK)
{
    const std::vector<Vector> points = {{1}, {2}};
    EXPECT_THROW(kmeans(points, 0, 0), PreconditionError);
    EXPECT_THROW(kmeans(points, 3, 0), PreconditionError);
}
