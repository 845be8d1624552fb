#pragma once

// Ground-truth generators (random protocol and the special graph families)
// and observation sampling.

#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "evdag/dag_model.hpp"

namespace evdag {

enum class NoiseKind { gaussian, rademacher, uniform };

std::string_view to_string(NoiseKind kind);
NoiseKind parse_noise_kind(std::string_view text);  // throws InvalidParams

// Observations: row r is sample r, column v is node v.
struct SampleMatrix {
    Eigen::MatrixXd data;
    std::uint64_t seed = 0;
    NoiseKind noise_kind = NoiseKind::gaussian;
    std::uint64_t source_digest = 0;

    int num_samples() const { return static_cast<int>(data.rows()); }
    int num_nodes() const { return static_cast<int>(data.cols()); }
};

// splitmix64 finalizer and a chained mix of several words. All seeds in the
// project are derived through these, and every generator below draws from
// std::mt19937_64 seeded with the result.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t mix_seed(std::uint64_t base, std::initializer_list<std::uint64_t> words);

// FNV-1a over the edge list and sigma2; identifies the generating SEM.
std::uint64_t sem_digest(const GaussianSem& sem);

// Step 1 and step 2 of the random protocol before truncation: a permutation
// and, for the node at each position j, the earlier nodes accepted with
// probability min(d / (j + 2), 1/2), in position order.
struct ParentDraw {
    std::vector<int> order;
    std::vector<std::vector<int>> accepted;  // indexed by position
};

// Random DAG: permutation, i.i.d. parent acceptance, truncation to the first
// d accepted, weights sign * U[b_min, b_max]. sigma2 = 1 and b_min declared.
GaussianSem random_dag(int n, int d, double b_min, double b_max, std::uint64_t seed);
// The same random stream, stopped after the acceptance draws (exposed for
// testing the protocol).
ParentDraw random_parent_draw(int n, int d, std::uint64_t seed);

// Draws m rows x with x (I - B) = e, e i.i.d. with mean 0 and variance sigma2.
SampleMatrix sample(const GaussianSem& sem, int m, std::uint64_t seed, NoiseKind kind = NoiseKind::gaussian);

// 0 -> 1 -> ... -> n-1 with every weight k.
GaussianSem chain_dag(int n, double k);

// Complete binary tree of the given height, node i has children 2i+1 and
// 2i+2, every weight lambda. lambda must lie in (1/sqrt(2), 1).
GaussianSem tree_dag(int height, double lambda);
std::vector<int> tree_leaves(int height);

enum class EnsembleFamily { matching, triangle };

struct EnsembleSpec {
    EnsembleFamily family = EnsembleFamily::matching;
    int n = 0;
    int index = 0;  // 0 is the base graph, k >= 1 perturbs block k-1
    double b_min = 0.5;
    double b1 = 0.5;  // triangle only
    double B = 1.0;   // triangle only
};

// Members per family: n/2 + 1 (matching) or n/3 + 1 (triangle).
int ensemble_size(EnsembleFamily family, int n);

// matching: pairs (Y_i, Z_i) = (2i, 2i+1) with Y_i -> Z_i of weight b_min;
//   member k reverses pair k-1.
// triangle: blocks (X_i, Y_i, Z_i) = (3i, 3i+1, 3i+2) with X->Y (B),
//   X->Z (b_min), Y->Z (b1); member k replaces block k-1 by the chain
//   X->Y (B), Y->Z (b1 + B b_min / (1 + B^2)).
GaussianSem ensemble_member(const EnsembleSpec& spec);

// Equal-variance chain X -> Y -> Z (weights b, b) and an unequal-variance
// model with a different skeleton orientation (X -> Z -> Y plus X -> Y)
// that induces the same covariance.
struct NonidentifiablePair {
    GaussianSem equal_variance;
    WeightedDag unequal_dag;
    std::vector<double> unequal_noise;
    Eigen::MatrixXd unequal_sigma;
};
NonidentifiablePair nonidentifiable_pair(double b);

// X -> Y (b), X -> Z (-b^2), Y -> Z (b): X and Z are marginally independent.
GaussianSem path_cancellation_triple(double b);

// Sample CSV: header "# seed=<u64> noise=<kind> n=<int> m=<int>", a
// "# digest=<hex>" line, then m rows of n values with 17 significant digits.
void write_sample_csv(std::ostream& out, const SampleMatrix& s);
SampleMatrix read_sample_csv(std::istream& in);

}  // namespace evdag
