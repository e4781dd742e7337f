#include <catch_amalgamated.hpp>

#include "fem/numkit.hpp"

using namespace fem;

TEST_CASE("dot: hand examples") {
    CHECK(dot(Vec64{1, 0, 0}, Vec64{0, 1, 0}) == 0.0);
    CHECK(dot(Vec64{1, 2}, Vec64{3, 4}) == 11.0);
}

TEST_CASE("dot: matches naive loop oracle bit-identically on random 512-dim pair") {
    SeededRng rng(42);
    Vec64 a = gauss(rng, 512);
    Vec64 b = gauss(rng, 512);
    double naive = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) naive += a[i] * b[i];
    CHECK(dot(a, b) == naive);
}

TEST_CASE("dot: length mismatch raises dimension error") {
    CHECK_THROWS_AS(dot(Vec64{1, 2}, Vec64{1, 2, 3}), Error);
    try {
        dot(Vec64{1, 2}, Vec64{1, 2, 3});
    } catch (const Error& e) {
        CHECK(e.cls() == ErrorClass::dimension);
    }
}

TEST_CASE("cosine: identity, antipodal, oracle") {
    SeededRng rng(7);
    Vec64 a = gauss(rng, 64);
    CHECK_THAT(cosine(a, a), Catch::Matchers::WithinAbs(1.0, 1e-12));
    Vec64 neg(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) neg[i] = -a[i];
    CHECK_THAT(cosine(a, neg), Catch::Matchers::WithinAbs(-1.0, 1e-12));

    Vec64 b = gauss(rng, 64);
    const double oracle = dot(a, b) / (std::sqrt(dot(a, a)) * std::sqrt(dot(b, b)));
    CHECK_THAT(cosine(a, b), Catch::Matchers::WithinAbs(oracle, 1e-15));
}

TEST_CASE("cosine: symmetric bit-identically") {
    SeededRng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        Vec64 a = gauss(rng, 33);
        Vec64 b = gauss(rng, 33);
        CHECK(cosine(a, b) == cosine(b, a));
    }
}

TEST_CASE("cosine: zero-norm input raises degenerate error") {
    Vec64 z(8, 0.0);
    Vec64 a(8, 1.0);
    CHECK_THROWS_AS(cosine(z, a), Error);
}

TEST_CASE("gauss: same seed reproduces, distinct streams differ") {
    SeededRng r1(123, 0), r2(123, 0), r3(123, 1);
    Vec64 a = gauss(r1, 100);
    Vec64 b = gauss(r2, 100);
    Vec64 c = gauss(r3, 100);
    CHECK(a == b);
    CHECK(a != c);
}

TEST_CASE("gauss: golden first draws for seed 1 stream 0") {
    // frozen regression values from the first generation of this generator
    SeededRng rng(1, 0);
    Vec64 g = gauss(rng, 8);
    static const double golden[8] = {
        -0x1.8d31050b826f7p+0, 0x1.bf95a23d2a2fbp-1,  -0x1.49381b19d752ep+0,
        0x1.72c2d4d1b4edep-3,  -0x1.3725d2de515fdp-1, 0x1.e5a34e805030dp-2,
        -0x1.f2487a2b2da1bp-2, -0x1.ee2e29703604dp-1,
    };
    for (int i = 0; i < 8; ++i) CHECK(g[i] == golden[i]);
}

TEST_CASE("gauss: law of large numbers, n=1e5") {
    SeededRng rng(2024, 5);
    const std::size_t n = 100000;
    Vec64 g = gauss(rng, n);
    double mean = 0.0;
    for (double x : g) mean += x;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double x : g) var += (x - mean) * (x - mean);
    var /= static_cast<double>(n);
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("gauss: all draws finite") {
    SeededRng rng(77, 3);
    Vec64 g = gauss(rng, 10000);
    CHECK(all_finite(g));
}

TEST_CASE("rng: substreams are decoupled from draw position") {
    SeededRng a(5, 1);
    SeededRng b = a.substream(7);
    (void)a.next_u64();
    SeededRng c = a.substream(7); // deriving after a draw gives the same stream
    CHECK(b.next_u64() == c.next_u64());
}

TEST_CASE("matmul_nt matches row-by-row dot within 1e-12") {
    SeededRng rng(11);
    Mat64 a(5, 17), b(3, 17);
    for (double& v : a.values) v = rng.next_gauss();
    for (double& v : b.values) v = rng.next_gauss();
    Mat64 c;
    matmul_nt(a, b, c);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            const double ref = dot(a.row_span(i), b.row_span(j));
            CHECK_THAT(c.at(i, j), Catch::Matchers::WithinAbs(ref, 1e-12));
        }
}

TEST_CASE("matmul_nn matches naive triple loop exactly") {
    SeededRng rng(12);
    Mat64 a(4, 6), b(6, 5);
    for (double& v : a.values) v = rng.next_gauss();
    for (double& v : b.values) v = rng.next_gauss();
    Mat64 c;
    matmul_nn(a, b, c);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
            double ref = 0.0;
            for (std::size_t k = 0; k < 6; ++k) ref += a.at(i, k) * b.at(k, j);
            CHECK_THAT(c.at(i, j), Catch::Matchers::WithinAbs(ref, 1e-12));
        }
}

TEST_CASE("reductions are rerun-stable") {
    SeededRng rng(13);
    Vec64 a = gauss(rng, 257);
    Vec64 b = gauss(rng, 257);
    const double first = dot(a, b);
    for (int i = 0; i < 5; ++i) CHECK(dot(a, b) == first);
}
