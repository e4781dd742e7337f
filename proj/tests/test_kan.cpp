#include <catch_amalgamated.hpp>

#include "fem/kan.hpp"

using namespace fem;

namespace {

// Independent naive Cox-de Boor oracle, recursive form.
double naive_bspline(const Vec64& t, std::size_t j, std::size_t k, double x) {
    if (k == 0) return (x >= t[j] && x < t[j + 1]) ? 1.0 : 0.0;
    double left = 0.0, right = 0.0;
    const double dl = t[j + k] - t[j];
    const double dr = t[j + k + 1] - t[j + 1];
    if (dl > 0.0) left = (x - t[j]) / dl * naive_bspline(t, j, k - 1, x);
    if (dr > 0.0) right = (t[j + k + 1] - x) / dr * naive_bspline(t, j + 1, k - 1, x);
    return left + right;
}

// Scalar per-edge reference for the KAN layer forward.
double naive_kan_output(const KanLayer& l, const Vec64& x, std::size_t o) {
    double acc = 0.0;
    const std::size_t nb = l.grid.basis_count();
    for (std::size_t i = 0; i < l.in_dim; ++i) {
        acc += l.base_weights.at(o, i) * silu(x[i]);
        double spline = 0.0;
        for (std::size_t j = 0; j < nb; ++j)
            spline += l.spline_coeffs.at(o * l.in_dim + i, j) *
                      naive_bspline(l.grid.knots, j, l.grid.order, x[i]);
        acc += l.spline_scalers.at(o, i) * spline;
    }
    return acc;
}

} // namespace

TEST_CASE("grid: knot layout") {
    auto g = SplineGrid::make(5, 3, -1.0, 1.0);
    REQUIRE(g.knots.size() == 5 + 2 * 3 + 1);
    CHECK(g.knots[3] == -1.0);
    CHECK(g.knots[5 + 3] == 1.0);
    for (std::size_t i = 1; i < g.knots.size(); ++i)
        CHECK(g.knots[i] > g.knots[i - 1]);
    CHECK(g.basis_count() == 8);
}

TEST_CASE("bspline: order 0 is the interval indicator") {
    auto g = SplineGrid::make(4, 0, 0.0, 4.0);
    Vec64 b = bspline_basis(g, 2.5);
    for (std::size_t j = 0; j < g.basis_count(); ++j)
        CHECK(b[j] == ((j == 2) ? 1.0 : 0.0));
}

TEST_CASE("bspline: partition of unity at an interior point") {
    auto g = SplineGrid::make(5, 3, -1.0, 1.0);
    Vec64 b = bspline_basis(g, 0.3);
    double sum = 0.0;
    for (double v : b) sum += v;
    CHECK_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-9));
}

TEST_CASE("bspline: partition of unity property over sampled interior points") {
    auto g = SplineGrid::make(5, 3, -1.0, 1.0);
    SeededRng rng(31);
    for (int trial = 0; trial < 1000; ++trial) {
        const double x = rng.next_range(-1.0, 1.0);
        Vec64 b = bspline_basis(g, x);
        double sum = 0.0;
        for (double v : b) sum += v;
        CHECK_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-9));
    }
}

TEST_CASE("bspline: matches naive recursion oracle within 1e-12") {
    auto g = SplineGrid::make(5, 3, -1.0, 1.0);
    SeededRng rng(32);
    for (int trial = 0; trial < 200; ++trial) {
        const double x = rng.next_range(-1.5, 1.5); // includes spillover
        Vec64 b = bspline_basis(g, x);
        for (std::size_t j = 0; j < g.basis_count(); ++j)
            CHECK_THAT(b[j], Catch::Matchers::WithinAbs(
                                 naive_bspline(g.knots, j, g.order, x), 1e-12));
    }
}

TEST_CASE("bspline: local support is exact") {
    auto g = SplineGrid::make(5, 3, -1.0, 1.0);
    SeededRng rng(33);
    for (int trial = 0; trial < 500; ++trial) {
        const double x = rng.next_range(-3.0, 3.0);
        Vec64 b = bspline_basis(g, x);
        for (std::size_t j = 0; j < g.basis_count(); ++j) {
            const bool outside =
                x < g.knots[j] || x >= g.knots[j + g.order + 1];
            if (outside) CHECK(b[j] == 0.0);
        }
    }
}

TEST_CASE("bspline: derivative matches finite differences") {
    auto g = SplineGrid::make(5, 3, -1.0, 1.0);
    SeededRng rng(34);
    std::vector<double> work(g.order0_count());
    Vec64 val(g.basis_count()), der(g.basis_count());
    for (int trial = 0; trial < 100; ++trial) {
        const double x = rng.next_range(-0.95, 0.95);
        bspline_basis_and_deriv(g, x, work.data(), val.data(), der.data());
        const double h = 1e-6;
        Vec64 up = bspline_basis(g, x + h);
        Vec64 dn = bspline_basis(g, x - h);
        for (std::size_t j = 0; j < g.basis_count(); ++j) {
            const double fd = (up[j] - dn[j]) / (2 * h);
            CHECK_THAT(der[j], Catch::Matchers::WithinAbs(fd, 1e-6));
        }
        // values agree with the plain basis routine
        Vec64 direct = bspline_basis(g, x);
        for (std::size_t j = 0; j < g.basis_count(); ++j)
            CHECK(val[j] == direct[j]);
    }
}

TEST_CASE("kan forward: all parameters zero gives zero output") {
    SeededRng rng(41);
    KanLayer l = KanLayer::init(4, 3, 5, 3, rng);
    l.base_weights.fill(0.0);
    l.spline_coeffs.fill(0.0);
    l.spline_scalers.fill(0.0);
    Mat64 x(2, 4);
    SeededRng xr(42);
    for (double& v : x.values) v = xr.next_gauss();
    Mat64 y;
    KanCache cache;
    l.forward(x, y, cache, false);
    for (double v : y.values) CHECK(v == 0.0);
}

TEST_CASE("kan forward: reduces to silu with identity base weights") {
    SeededRng rng(43);
    KanLayer l = KanLayer::init(3, 3, 5, 3, rng);
    l.spline_coeffs.fill(0.0);
    l.base_weights.fill(0.0);
    for (std::size_t i = 0; i < 3; ++i) l.base_weights.at(i, i) = 1.0;
    Mat64 x(2, 3);
    SeededRng xr(44);
    for (double& v : x.values) v = xr.next_gauss();
    Mat64 y;
    KanCache cache;
    l.forward(x, y, cache, false);
    for (std::size_t b = 0; b < 2; ++b)
        for (std::size_t o = 0; o < 3; ++o)
            CHECK_THAT(y.at(b, o),
                       Catch::Matchers::WithinAbs(silu(x.at(b, o)), 1e-15));
}

TEST_CASE("kan forward: matches per-edge scalar oracle within 1e-12") {
    SeededRng rng(45);
    KanLayer l = KanLayer::init(4, 3, 5, 3, rng);
    Mat64 x(6, 4);
    SeededRng xr(46);
    for (double& v : x.values) v = xr.next_gauss() * 0.8;
    Mat64 y;
    KanCache cache;
    l.forward(x, y, cache, false);
    for (std::size_t b = 0; b < 6; ++b)
        for (std::size_t o = 0; o < 3; ++o)
            CHECK_THAT(y.at(b, o), Catch::Matchers::WithinAbs(
                                       naive_kan_output(l, x.row_vec(b), o), 1e-12));
}

TEST_CASE("kan forward: batch equals row-wise single-sample forward bit-identically") {
    SeededRng rng(47);
    KanLayer l = KanLayer::init(5, 4, 5, 3, rng);
    Mat64 x(7, 5);
    SeededRng xr(48);
    for (double& v : x.values) v = xr.next_gauss();
    Mat64 y_batch;
    KanCache cache;
    l.forward(x, y_batch, cache, false);
    for (std::size_t b = 0; b < 7; ++b) {
        Mat64 single(1, 5);
        single.set_row(0, x.row_span(b));
        Mat64 y1;
        KanCache c1;
        l.forward(single, y1, c1, false);
        for (std::size_t o = 0; o < 4; ++o) CHECK(y1.at(0, o) == y_batch.at(b, o));
    }
}

TEST_CASE("kan forward: shape mismatch raises dimension error") {
    SeededRng rng(49);
    KanLayer l = KanLayer::init(4, 3, 5, 3, rng);
    Mat64 x(2, 5);
    Mat64 y;
    KanCache cache;
    CHECK_THROWS_AS(l.forward(x, y, cache, false), Error);
}

TEST_CASE("kan backward: zero upstream gives zero gradients") {
    SeededRng rng(50);
    KanLayer l = KanLayer::init(3, 2, 5, 3, rng);
    Mat64 x(4, 3);
    SeededRng xr(51);
    for (double& v : x.values) v = xr.next_gauss();
    Mat64 y;
    KanCache cache;
    l.forward(x, y, cache, true);
    Mat64 up(4, 2);
    Mat64 ig;
    l.backward(cache, up, ig);
    for (double v : l.g_base.values) CHECK(v == 0.0);
    for (double v : l.g_coeffs.values) CHECK(v == 0.0);
    for (double v : l.g_scalers.values) CHECK(v == 0.0);
    for (double v : ig.values) CHECK(v == 0.0);
}

namespace {

// Scalar loss sum(y * w); with input_grad set, also runs backward with
// upstream dloss/dy = w and returns the input gradient.
double layer_loss(KanLayer& l, const Mat64& x, const Mat64& w, Mat64* input_grad) {
    Mat64 y;
    KanCache cache;
    l.forward(x, y, cache, input_grad != nullptr);
    double loss = 0.0;
    for (std::size_t i = 0; i < y.values.size(); ++i)
        loss += y.values[i] * w.values[i];
    if (input_grad) l.backward(cache, w, *input_grad);
    return loss;
}

} // namespace

TEST_CASE("kan backward: parameter and input grads match finite differences") {
    SeededRng rng(52);
    KanLayer l = KanLayer::init(3, 2, 5, 3, rng);
    Mat64 x(4, 3);
    SeededRng xr(53);
    for (double& v : x.values) v = xr.next_gauss() * 0.9;
    Mat64 w(4, 2);
    for (double& v : w.values) v = xr.next_gauss();

    l.zero_grads();
    Mat64 input_grad;
    const double base_loss = layer_loss(l, x, w, &input_grad);
    (void)base_loss;

    const double h = 1e-5;
    auto fd_check = [&](Mat64& param, const Mat64& grad) {
        for (std::size_t i = 0; i < param.values.size(); ++i) {
            const double orig = param.values[i];
            param.values[i] = orig + h;
            const double up = layer_loss(l, x, w, nullptr);
            param.values[i] = orig - h;
            const double dn = layer_loss(l, x, w, nullptr);
            param.values[i] = orig;
            const double fd = (up - dn) / (2 * h);
            const double a = grad.values[i];
            const double denom = std::max({1e-8, std::abs(a), std::abs(fd)});
            CHECK(std::abs(a - fd) / denom < 1e-6);
        }
    };
    fd_check(l.base_weights, l.g_base);
    fd_check(l.spline_scalers, l.g_scalers);
    fd_check(l.spline_coeffs, l.g_coeffs);

    // input gradient
    for (std::size_t i = 0; i < x.values.size(); ++i) {
        const double orig = x.values[i];
        x.values[i] = orig + h;
        const double up = layer_loss(l, x, w, nullptr);
        x.values[i] = orig - h;
        const double dn = layer_loss(l, x, w, nullptr);
        x.values[i] = orig;
        const double fd = (up - dn) / (2 * h);
        const double a = input_grad.values[i];
        const double denom = std::max({1e-8, std::abs(a), std::abs(fd)});
        CHECK(std::abs(a - fd) / denom < 1e-6);
    }
}

TEST_CASE("kan init: reproducible by seed, correct shapes") {
    SeededRng r1(60), r2(60);
    KanLayer a = KanLayer::init(6, 4, 5, 3, r1);
    KanLayer b = KanLayer::init(6, 4, 5, 3, r2);
    CHECK(a.base_weights.values == b.base_weights.values);
    CHECK(a.spline_coeffs.values == b.spline_coeffs.values);
    CHECK(a.spline_coeffs.cols == 8); // G + k
    for (double v : a.spline_scalers.values) CHECK(v == 1.0);
}

TEST_CASE("kan init: fresh-layer forward scale on unit gauss inputs") {
    SeededRng rng(61);
    KanLayer l = KanLayer::init(16, 16, 5, 3, rng);
    const std::size_t batch = 1024;
    Mat64 x(batch, 16);
    SeededRng xr(62);
    for (double& v : x.values) v = xr.next_gauss();
    Mat64 y;
    KanCache cache;
    l.forward(x, y, cache, false);
    for (std::size_t o = 0; o < 16; ++o) {
        double mean = 0.0;
        for (std::size_t b = 0; b < batch; ++b) mean += y.at(b, o);
        mean /= batch;
        double var = 0.0;
        for (std::size_t b = 0; b < batch; ++b)
            var += (y.at(b, o) - mean) * (y.at(b, o) - mean);
        const double sd = std::sqrt(var / batch);
        CHECK(sd > 0.05);
        CHECK(sd < 5.0);
    }
}

TEST_CASE("femkan: dims chain and exactly three layers") {
    FemKan m = FemKan::init({8, 6, 6, 4}, 5, 3, 99);
    REQUIRE(m.layers.size() == 3);
    CHECK(m.in_dim() == 8);
    CHECK(m.out_dim() == 4);
    CHECK_THROWS_AS(FemKan::init({8, 4}, 5, 3, 99), Error);
}

TEST_CASE("femkan: inference forward equals train forward values") {
    FemKan m = FemKan::init({5, 4, 4, 3}, 5, 3, 100);
    Mat64 x(3, 5);
    SeededRng xr(101);
    for (double& v : x.values) v = xr.next_gauss();
    Mat64 a = m.forward(x);
    Mat64 b = m.train_forward(x);
    CHECK(a.values == b.values);
}
