#include <cmath>
#include <sstream>

#include "doctest.h"
#include "evdag/dag_model.hpp"
#include "evdag/errors.hpp"
#include "evdag/synthesis.hpp"
#include "test_support.hpp"

using namespace evdag;

namespace {

Eigen::MatrixXd empirical_cov(const Eigen::MatrixXd& x) {
    return (x.transpose() * x) / static_cast<double>(x.rows());
}

}  // namespace

TEST_CASE("random_dag respects its parameters") {
    GaussianSem one = random_dag(1, 1, 0.5, 1.0, 3);
    CHECK(one.num_nodes() == 1);
    CHECK(one.dag().num_edges() == 0);
    for (std::uint64_t s = 0; s < 200; ++s) {
        GaussianSem sem = random_dag(25, 4, 0.5, 1.0, s);
        CHECK(sem.sigma2() == 1.0);
        CHECK(sem.b_min() == 0.5);
        CHECK(sem.dag().max_in_degree() <= 4);
        CHECK(sem.dag().degree_bound() == 4);
        for (const Edge& e : sem.dag().edges()) {
            CHECK(std::abs(e.weight) >= 0.5);
            CHECK(std::abs(e.weight) <= 1.0);
        }
    }
    CHECK_THROWS_AS(random_dag(5, 0, 0.5, 1.0, 1), InvalidParams);
    CHECK_THROWS_AS(random_dag(5, 5, 0.5, 1.0, 1), InvalidParams);
    CHECK_THROWS_AS(random_dag(5, 2, 1.0, 0.5, 1), InvalidParams);
    CHECK_THROWS_AS(random_dag(5, 2, 0.0, 0.5, 1), InvalidParams);
}

TEST_CASE("generators are deterministic in their seed") {
    GaussianSem a = random_dag(15, 3, 0.5, 1.0, 99);
    GaussianSem b = random_dag(15, 3, 0.5, 1.0, 99);
    CHECK(a.dag().edges() == b.dag().edges());
    CHECK(sem_digest(a) == sem_digest(b));
    GaussianSem c = random_dag(15, 3, 0.5, 1.0, 100);
    CHECK(sem_digest(a) != sem_digest(c));
    for (NoiseKind k : {NoiseKind::gaussian, NoiseKind::rademacher, NoiseKind::uniform}) {
        SampleMatrix s1 = sample(a, 50, 7, k);
        SampleMatrix s2 = sample(a, 50, 7, k);
        CHECK(s1.data == s2.data);
        CHECK(s1.source_digest == sem_digest(a));
        CHECK(s1.noise_kind == k);
        CHECK(sample(a, 50, 8, k).data != s1.data);
    }
}

TEST_CASE("parent acceptance frequency matches the protocol") {
    const int n = 10, d = 3, trials = 100000;
    std::vector<double> hits(n, 0.0);
    for (int t = 0; t < trials; ++t) {
        ParentDraw draw = random_parent_draw(n, d, mix_seed(1234, {static_cast<std::uint64_t>(t)}));
        for (int j = 1; j < n; ++j) hits[j] += static_cast<double>(draw.accepted[j].size());
    }
    for (int j = 1; j < n; ++j) {
        const double p = std::min(static_cast<double>(d) / (j + 2), 0.5);
        const double pairs = static_cast<double>(trials) * j;
        const double se = std::sqrt(p * (1 - p) / pairs);
        CHECK(std::abs(hits[j] / pairs - p) <= 3 * se);
    }
}

TEST_CASE("sampling reproduces the population covariance") {
    SampleMatrix e = sample(GaussianSem(validate_and_order(4, {})), 100000, 3);
    CHECK((empirical_cov(e.data) - Eigen::MatrixXd::Identity(4, 4)).norm() < 0.1);

    SampleMatrix c = sample(GaussianSem(validate_and_order(2, {{0, 1, 0.5}})), 1000000, 4);
    Eigen::MatrixXd cov = empirical_cov(c.data);
    CHECK(cov(0, 0) == doctest::Approx(1.0).epsilon(0.01));
    CHECK(cov(0, 1) == doctest::Approx(0.5).epsilon(0.02));
    CHECK(cov(1, 1) == doctest::Approx(1.25).epsilon(0.01));

    std::mt19937_64 rng(8);
    for (int t = 0; t < 10; ++t) {
        WeightedDag g = testing::random_graph(rng, 1, 6, 0.5, 3);
        GaussianSem sem(g);
        Eigen::MatrixXd sig = covariance(sem).sigma;
        SampleMatrix s = sample(sem, 200000, rng());
        CHECK((empirical_cov(s.data) - sig).norm() <= 0.05 * sig.norm());
    }
}

TEST_CASE("non-gaussian noise has variance sigma2") {
    GaussianSem sem(validate_and_order(2, {{0, 1, 0.8}}), 2.0);
    for (NoiseKind k : {NoiseKind::rademacher, NoiseKind::uniform}) {
        SampleMatrix s = sample(sem, 1000000, 5, k);
        Eigen::VectorXd resid = s.data.col(1) - 0.8 * s.data.col(0);
        CHECK(resid.squaredNorm() / s.num_samples() == doctest::Approx(2.0).epsilon(0.01));
        CHECK(s.data.col(0).squaredNorm() / s.num_samples() == doctest::Approx(2.0).epsilon(0.01));
    }
    SampleMatrix r = sample(sem, 100, 6, NoiseKind::rademacher);
    for (Eigen::Index i = 0; i < r.data.rows(); ++i) CHECK(std::abs(r.data(i, 0)) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("chain family") {
    GaussianSem c = chain_dag(2, 0.5);
    CHECK(c.dag().num_edges() == 1);
    CHECK(*c.dag().weight(0, 1) == 0.5);
    CHECK(chain_dag(10, 1.2).dag().num_edges() == 9);
    CHECK_THROWS_AS(chain_dag(2, 0.0), InvalidParams);
}

TEST_CASE("binary tree family") {
    GaussianSem t1 = tree_dag(1, 0.8);
    CHECK(t1.num_nodes() == 3);
    CHECK(t1.dag().num_edges() == 2);
    for (const Edge& e : t1.dag().edges()) CHECK(e.weight == 0.8);
    const double lam = 0.84;
    for (int h = 1; h <= 7; ++h) {
        GaussianSem t = tree_dag(h, lam);
        CovariancePair c = covariance(t);
        const std::vector<int> leaves = tree_leaves(h);
        CHECK(static_cast<int>(leaves.size()) == (1 << h));
        double series = 0.0, leaf_var = 0.0;
        for (int i = 0; i <= h; ++i) {
            series += std::pow(2 * lam * lam, i);
            leaf_var += std::pow(lam * lam, i);
        }
        for (int v : leaves) CHECK(c.sigma(v, v) == doctest::Approx(leaf_var));
        CHECK(leaf_var < 1 / (1 - lam * lam));
        Eigen::VectorXd w = Eigen::VectorXd::Zero(t.num_nodes());
        for (int v : leaves) w(v) = 1.0 / std::sqrt(static_cast<double>(1 << h));
        CHECK(w.dot(c.sigma * w) == doctest::Approx(series).epsilon(1e-9));
    }
    CHECK_THROWS_AS(tree_dag(3, 0.5), InvalidParams);
    CHECK_THROWS_AS(tree_dag(3, 1.0), InvalidParams);
}

TEST_CASE("ensemble members") {
    const double bm = 0.4;
    GaussianSem m0 = ensemble_member({EnsembleFamily::matching, 8, 0, bm});
    CHECK(m0.dag().num_edges() == 4);
    for (int i = 0; i < 4; ++i) CHECK(*m0.dag().weight(2 * i, 2 * i + 1) == bm);
    GaussianSem m2 = ensemble_member({EnsembleFamily::matching, 8, 2, bm});
    CHECK(m2.dag().has_edge(3, 2));
    CHECK_FALSE(m2.dag().has_edge(2, 3));
    CHECK(ensemble_size(EnsembleFamily::matching, 8) == 5);
    CHECK_THROWS_AS(ensemble_member({EnsembleFamily::matching, 7, 0, bm}), InvalidParams);
    CHECK_THROWS_AS(ensemble_member({EnsembleFamily::matching, 8, 5, bm}), InvalidParams);

    const double b1 = 0.5, B = 1.2;
    GaussianSem t1 = ensemble_member({EnsembleFamily::triangle, 6, 1, bm, b1, B});
    CHECK(*t1.dag().weight(0, 1) == B);
    CHECK_FALSE(t1.dag().has_edge(0, 2));
    CHECK(*t1.dag().weight(1, 2) == doctest::Approx(b1 + B * bm / (1 + B * B)));
    CHECK(*t1.dag().weight(3, 5) == bm);
    CHECK(ensemble_size(EnsembleFamily::triangle, 6) == 3);
    CHECK_THROWS_AS(ensemble_member({EnsembleFamily::triangle, 7, 0, bm, b1, B}), InvalidParams);
}

TEST_CASE("non-identifiable pair") {
    for (double b : {0.3, 0.7, 1e-9}) {
        NonidentifiablePair p = nonidentifiable_pair(b);
        Eigen::Matrix3d expect;
        expect << 1, b, b * b, b, b * b + 1, b * b * b + b, b * b, b * b * b + b, b * b * b * b + b * b + 1;
        CHECK((covariance(p.equal_variance).sigma - Eigen::MatrixXd(expect)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((p.unequal_sigma - Eigen::MatrixXd(expect)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((covariance_with_noise(p.unequal_dag, p.unequal_noise) - Eigen::MatrixXd(expect)).cwiseAbs().maxCoeff() <
              1e-12);
    }
    NonidentifiablePair p = nonidentifiable_pair(0.3);
    const auto [lo, hi] = std::minmax_element(p.unequal_noise.begin(), p.unequal_noise.end());
    CHECK(*hi / *lo == doctest::Approx(std::pow(0.09 + 1, 2)));
    CHECK_THROWS_AS(nonidentifiable_pair(0.0), InvalidParams);
}

TEST_CASE("path cancellation triple") {
    for (double b : {0.5, 1.5, -0.7}) {
        GaussianSem sem = path_cancellation_triple(b);
        CHECK_FALSE(sem.b_min().has_value());
        CovariancePair c = covariance(sem);
        CHECK(std::abs(c.sigma(0, 2)) < 1e-15);
        CHECK(c.sigma(2, 2) == doctest::Approx(1 + b * b));
        CHECK(*sem.dag().weight(0, 2) == doctest::Approx(-b * b));
    }
    CHECK_THROWS_AS(path_cancellation_triple(0.0), InvalidParams);
}

TEST_CASE("sample CSV round trip") {
    GaussianSem sem = random_dag(6, 2, 0.5, 1.0, 21);
    SampleMatrix s = sample(sem, 40, 77, NoiseKind::uniform);
    std::stringstream ss;
    write_sample_csv(ss, s);
    const std::string text = ss.str();
    CHECK(text.rfind("# seed=77 noise=uniform n=6 m=40", 0) == 0);
    SampleMatrix back = read_sample_csv(ss);
    CHECK(back.data == s.data);
    CHECK(back.seed == 77);
    CHECK(back.noise_kind == NoiseKind::uniform);
    CHECK(back.source_digest == s.source_digest);

    std::istringstream ragged("# seed=1 noise=gaussian n=2 m=2\n1,2\n3\n");
    CHECK_THROWS_AS(read_sample_csv(ragged), ParseError);
    std::istringstream short_rows("# seed=1 noise=gaussian n=2 m=3\n1,2\n3,4\n");
    CHECK_THROWS_AS(read_sample_csv(short_rows), ParseError);
}

TEST_CASE("noise kind names round trip") {
    for (NoiseKind k : {NoiseKind::gaussian, NoiseKind::rademacher, NoiseKind::uniform})
        CHECK(parse_noise_kind(to_string(k)) == k);
    CHECK_THROWS_AS(parse_noise_kind("cauchy"), InvalidParams);
}
