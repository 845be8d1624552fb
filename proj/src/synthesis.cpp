#include "evdag/synthesis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "evdag/errors.hpp"

namespace evdag {

std::string_view to_string(NoiseKind kind) {
    switch (kind) {
        case NoiseKind::gaussian: return "gaussian";
        case NoiseKind::rademacher: return "rademacher";
        case NoiseKind::uniform: return "uniform";
    }
    return "gaussian";
}

NoiseKind parse_noise_kind(std::string_view text) {
    if (text == "gaussian") return NoiseKind::gaussian;
    if (text == "rademacher") return NoiseKind::rademacher;
    if (text == "uniform") return NoiseKind::uniform;
    throw InvalidParams("unknown noise kind '" + std::string(text) + "'");
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t base, std::initializer_list<std::uint64_t> words) {
    std::uint64_t h = splitmix64(base);
    for (std::uint64_t w : words) h = splitmix64(h ^ splitmix64(w + 0x632BE59BD9B4E019ull));
    return h;
}

std::uint64_t sem_digest(const GaussianSem& sem) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto feed = [&h](const void* p, std::size_t len) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t k = 0; k < len; ++k) {
            h ^= b[k];
            h *= 0x100000001b3ull;
        }
    };
    const int n = sem.num_nodes();
    const double s2 = sem.sigma2();
    feed(&n, sizeof n);
    feed(&s2, sizeof s2);
    for (const Edge& e : sem.dag().edges()) {
        feed(&e.parent, sizeof e.parent);
        feed(&e.child, sizeof e.child);
        feed(&e.weight, sizeof e.weight);
    }
    return h;
}

namespace {

void check_random_params(int n, int d, double b_min, double b_max) {
    if (n < 1) throw InvalidParams("n must be at least 1");
    if (d < 1 || (n > 1 && d >= n)) throw InvalidParams("d must satisfy 1 <= d < n");
    if (!(b_min > 0.0) || !(b_min < b_max) || !std::isfinite(b_max))
        throw InvalidParams("weights must satisfy 0 < b_min < b_max");
}

ParentDraw draw_parents(int n, int d, std::mt19937_64& rng) {
    ParentDraw draw;
    draw.order.resize(n);
    for (int k = 0; k < n; ++k) draw.order[k] = k;
    std::shuffle(draw.order.begin(), draw.order.end(), rng);
    draw.accepted.assign(n, {});
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int j = 1; j < n; ++j) {
        const double p = std::min(static_cast<double>(d) / (j + 2), 0.5);
        for (int k = 0; k < j; ++k)
            if (unit(rng) < p) draw.accepted[j].push_back(draw.order[k]);
    }
    return draw;
}

}  // namespace

ParentDraw random_parent_draw(int n, int d, std::uint64_t seed) {
    check_random_params(n, d, 0.5, 1.0);
    std::mt19937_64 rng(seed);
    return draw_parents(n, d, rng);
}

GaussianSem random_dag(int n, int d, double b_min, double b_max, std::uint64_t seed) {
    check_random_params(n, d, b_min, b_max);
    std::mt19937_64 rng(seed);
    ParentDraw draw = draw_parents(n, d, rng);
    std::uniform_real_distribution<double> mag(b_min, b_max);
    std::bernoulli_distribution coin(0.5);
    std::vector<Edge> edges;
    for (int j = 1; j < n; ++j) {
        const auto& acc = draw.accepted[j];
        const std::size_t keep = std::min<std::size_t>(acc.size(), static_cast<std::size_t>(d));
        for (std::size_t k = 0; k < keep; ++k) {
            double w = mag(rng);
            if (!coin(rng)) w = -w;
            edges.push_back({acc[k], draw.order[j], w});
        }
    }
    return GaussianSem(validate_and_order(n, edges).with_degree_bound(d), 1.0, b_min);
}

SampleMatrix sample(const GaussianSem& sem, int m, std::uint64_t seed, NoiseKind kind) {
    if (m < 1) throw InvalidParams("m must be at least 1");
    const auto& dag = sem.dag();
    const int n = dag.num_nodes();
    const double sd = std::sqrt(sem.sigma2());
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, sd);
    std::uniform_real_distribution<double> unif(-sd * std::sqrt(3.0), sd * std::sqrt(3.0));

    SampleMatrix out;
    out.seed = seed;
    out.noise_kind = kind;
    out.source_digest = sem_digest(sem);
    out.data.resize(m, n);
    std::vector<double> x(n);
    for (int r = 0; r < m; ++r) {
        for (int v = 0; v < n; ++v) {
            switch (kind) {
                case NoiseKind::gaussian: x[v] = gauss(rng); break;
                case NoiseKind::rademacher: x[v] = (rng() >> 63) ? sd : -sd; break;
                case NoiseKind::uniform: x[v] = unif(rng); break;
            }
        }
        for (int v : dag.topo_order()) {
            const auto& ps = dag.parents(v);
            const auto& ws = dag.parent_weights(v);
            for (std::size_t k = 0; k < ps.size(); ++k) x[v] += ws[k] * x[ps[k]];
        }
        for (int v = 0; v < n; ++v) out.data(r, v) = x[v];
    }
    return out;
}

GaussianSem chain_dag(int n, double k) {
    if (n < 2) throw InvalidParams("chain needs n >= 2");
    if (k == 0.0) throw InvalidParams("chain weight must be nonzero");
    std::vector<Edge> edges;
    for (int v = 0; v + 1 < n; ++v) edges.push_back({v, v + 1, k});
    return GaussianSem(validate_and_order(n, edges));
}

GaussianSem tree_dag(int height, double lambda) {
    if (height < 1) throw InvalidParams("tree height must be at least 1");
    if (height > 24) throw InvalidParams("tree height too large");
    if (!(lambda > 1.0 / std::sqrt(2.0) && lambda < 1.0)) throw InvalidParams("lambda must lie in (1/sqrt(2), 1)");
    const int n = (1 << (height + 1)) - 1;
    std::vector<Edge> edges;
    for (int i = 0; 2 * i + 2 < n; ++i) {
        edges.push_back({i, 2 * i + 1, lambda});
        edges.push_back({i, 2 * i + 2, lambda});
    }
    return GaussianSem(validate_and_order(n, edges));
}

std::vector<int> tree_leaves(int height) {
    std::vector<int> out;
    for (int v = (1 << height) - 1; v <= (1 << (height + 1)) - 2; ++v) out.push_back(v);
    return out;
}

int ensemble_size(EnsembleFamily family, int n) {
    return family == EnsembleFamily::matching ? n / 2 + 1 : n / 3 + 1;
}

GaussianSem ensemble_member(const EnsembleSpec& spec) {
    if (!(spec.b_min > 0.0)) throw InvalidParams("b_min must be positive");
    std::vector<Edge> edges;
    if (spec.family == EnsembleFamily::matching) {
        if (spec.n < 2 || spec.n % 2 != 0) throw InvalidParams("matching ensemble needs an even n");
        const int blocks = spec.n / 2;
        if (spec.index < 0 || spec.index > blocks) throw InvalidParams("ensemble index out of range");
        for (int b = 0; b < blocks; ++b) {
            const int y = 2 * b, z = 2 * b + 1;
            if (b == spec.index - 1) edges.push_back({z, y, spec.b_min});
            else edges.push_back({y, z, spec.b_min});
        }
    } else {
        if (spec.n < 3 || spec.n % 3 != 0) throw InvalidParams("triangle ensemble needs n divisible by 3");
        if (spec.b1 == 0.0) throw InvalidParams("triangle needs b1 != 0");
        const int blocks = spec.n / 3;
        if (spec.index < 0 || spec.index > blocks) throw InvalidParams("ensemble index out of range");
        const double chain_w = spec.b1 + spec.B * spec.b_min / (1.0 + spec.B * spec.B);
        for (int b = 0; b < blocks; ++b) {
            const int x = 3 * b, y = 3 * b + 1, z = 3 * b + 2;
            if (spec.B != 0.0) edges.push_back({x, y, spec.B});
            if (b == spec.index - 1) {
                edges.push_back({y, z, chain_w});
            } else {
                edges.push_back({x, z, spec.b_min});
                edges.push_back({y, z, spec.b1});
            }
        }
    }
    return GaussianSem(validate_and_order(spec.n, edges));
}

NonidentifiablePair nonidentifiable_pair(double b) {
    if (!(b > 0.0)) throw InvalidParams("b must be positive");
    NonidentifiablePair out;
    out.equal_variance = GaussianSem(validate_and_order(3, {{0, 1, b}, {1, 2, b}}));
    const double c = b / (b * b + 1.0);
    // Node order X=0, Y=1, Z=2. Z is generated from X, then Y from X and Z.
    out.unequal_dag = validate_and_order(3, {{0, 2, b * b}, {0, 1, c}, {2, 1, c}});
    out.unequal_noise = {1.0, 1.0 / (b * b + 1.0), b * b + 1.0};
    out.unequal_sigma = covariance_with_noise(out.unequal_dag, out.unequal_noise);
    return out;
}

GaussianSem path_cancellation_triple(double b) {
    if (b == 0.0 || !std::isfinite(b)) throw InvalidParams("b must be nonzero");
    return GaussianSem(validate_and_order(3, {{0, 1, b}, {0, 2, -b * b}, {1, 2, b}}));
}

void write_sample_csv(std::ostream& out, const SampleMatrix& s) {
    out << "# seed=" << s.seed << " noise=" << to_string(s.noise_kind) << " n=" << s.num_nodes()
        << " m=" << s.num_samples() << '\n';
    char hex[32];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(s.source_digest));
    out << "# digest=" << hex << '\n';
    char buf[40];
    std::string line;
    for (int r = 0; r < s.num_samples(); ++r) {
        line.clear();
        for (int c = 0; c < s.num_nodes(); ++c) {
            if (c) line += ',';
            std::snprintf(buf, sizeof buf, "%.17g", s.data(r, c));
            line += buf;
        }
        line += '\n';
        out << line;
    }
}

namespace {

// Reads "key=value" tokens from a comment line.
std::string header_value(const std::string& line, const std::string& key) {
    std::istringstream ss(line.substr(1));
    std::string tok;
    while (ss >> tok) {
        if (tok.size() > key.size() && tok.compare(0, key.size() + 1, key + "=") == 0)
            return tok.substr(key.size() + 1);
    }
    return {};
}

}  // namespace

SampleMatrix read_sample_csv(std::istream& in) {
    SampleMatrix s;
    std::string line;
    int n = -1, m = -1;
    std::vector<double> values;
    int rows = 0, lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            try {
                if (auto v = header_value(line, "seed"); !v.empty()) s.seed = std::stoull(v);
                if (auto v = header_value(line, "noise"); !v.empty()) s.noise_kind = parse_noise_kind(v);
                if (auto v = header_value(line, "n"); !v.empty()) n = std::stoi(v);
                if (auto v = header_value(line, "m"); !v.empty()) m = std::stoi(v);
                if (auto v = header_value(line, "digest"); !v.empty()) s.source_digest = std::stoull(v, nullptr, 16);
            } catch (const std::logic_error&) {
                throw ParseError("line " + std::to_string(lineno) + ": malformed header");
            }
            continue;
        }
        int cols = 0;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            std::size_t next = line.find(',', pos);
            if (next == std::string::npos) next = line.size();
            std::string field = line.substr(pos, next - pos);
            char* end = nullptr;
            double v = std::strtod(field.c_str(), &end);
            if (field.empty() || end != field.c_str() + field.size() || !std::isfinite(v))
                throw ParseError("line " + std::to_string(lineno) + ": bad value '" + field + "'");
            values.push_back(v);
            ++cols;
            pos = next + 1;
        }
        if (n < 0) n = cols;
        if (cols != n) throw ParseError("line " + std::to_string(lineno) + ": expected " + std::to_string(n) + " columns");
        ++rows;
    }
    if (rows == 0 || n < 1) throw ParseError("sample file has no data rows");
    if (m >= 0 && m != rows) throw ParseError("header declares m=" + std::to_string(m) + " but found " + std::to_string(rows) + " rows");
    s.data.resize(rows, n);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < n; ++c) s.data(r, c) = values[static_cast<std::size_t>(r) * n + c];
    return s;
}

}  // namespace evdag
