#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "dool/common.hpp"
#include "dool/nn.hpp"
#include "dool/tape.hpp"

using namespace dool;

namespace {

Mat random_mat(int r, int c, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Mat m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = dist(rng);
    return m;
}

/// Graph touching every tape op, parameterized by four external matrices.
struct EveryOpGraph {
    Mat P1 = random_mat(3, 4, 11);  // affine weight
    Mat P2 = random_mat(3, 1, 12);  // affine bias
    Mat P3 = random_mat(2, 3, 13);  // matmul_nt factor
    Mat P4 = random_mat(3, 2, 14);  // linear weight
    Mat X = random_mat(5, 4, 15);

    Tape tape;
    std::vector<int> params;
    int root = -1;

    EveryOpGraph() {
        int x = tape.constant(X);
        int p1 = tape.param(&P1);
        int p2 = tape.param(&P2);
        int p3 = tape.param(&P3);
        int p4 = tape.param(&P4);
        params = {p1, p2, p3, p4};

        int a = tape.affine(x, p1, p2);                     // 5x3
        int mix = tape.sub(tape.add(tape.tanh_(a), tape.sin_(a)), tape.cos_(a));
        mix = tape.mul(mix, tape.sech2(a));                 // 5x3
        mix = tape.add_const(mix, Mat::Constant(5, 3, 0.25));
        mix = tape.mul_const(mix, random_mat(5, 3, 16));
        mix = tape.scale(mix, 1.7);                         // 5x3
        int m = tape.matmul_nt(mix, p3);                    // 5x2
        int l = tape.linear(m, p4);                         // 5x3
        int r2 = tape.row(l, 2);                            // 1x3
        int bc = tape.row_bcast_mul(mix, r2);               // 5x3
        int cb = tape.cols(bc, 1, 2);                       // 5x2
        int head = tape.dot_const(cb, random_mat(5, 2, 17));
        int lg = tape.log_(tape.add_const(tape.square(a), Mat::Constant(5, 3, 0.5)));
        int tail = tape.sum_all(lg);
        root = tape.sum_all(tape.add(head, tail));
    }

    double eval() {
        tape.forward();
        return tape.value_scalar(root);
    }
};

double central_diff(EveryOpGraph& g, Mat& storage, int i, int j, double h) {
    const double keep = storage(i, j);
    storage(i, j) = keep + h;
    const double up = g.eval();
    storage(i, j) = keep - h;
    const double dn = g.eval();
    storage(i, j) = keep;
    g.eval();
    return (up - dn) / (2.0 * h);
}

} // namespace

TEST_CASE("every tape op backpropagates finite-difference-exact gradients") {
    EveryOpGraph g;
    g.eval();
    g.tape.backward(g.root);

    Mat* stores[4] = {&g.P1, &g.P2, &g.P3, &g.P4};
    for (int p = 0; p < 4; ++p) {
        const Mat analytic = g.tape.grad(g.params[static_cast<std::size_t>(p)]);
        for (int i = 0; i < stores[p]->rows(); ++i) {
            for (int j = 0; j < stores[p]->cols(); ++j) {
                const double fd = central_diff(g, *stores[p], i, j, 1e-5);
                const double scale = std::max({std::abs(fd), std::abs(analytic(i, j)), 1.0});
                CHECK(std::abs(fd - analytic(i, j)) / scale <= 1e-6);
            }
        }
    }
}

TEST_CASE("tape forward refresh tracks parameter updates") {
    Mat w = Mat::Constant(1, 1, 2.0);
    Tape t;
    int p = t.param(&w);
    int r = t.sum_all(t.square(p));
    CHECK(t.value_scalar(r) == doctest::Approx(4.0));
    w(0, 0) = 3.0;
    t.forward();
    CHECK(t.value_scalar(r) == doctest::Approx(9.0));
    t.backward(r);
    CHECK(t.grad(p)(0, 0) == doctest::Approx(6.0)); // d(w^2)/dw at w=3
}

TEST_CASE("tape rejects malformed graphs") {
    Tape t;
    int a = t.constant(Mat::Zero(2, 3));
    int b = t.constant(Mat::Zero(3, 2));
    CHECK_THROWS_AS(t.add(a, b), UnsupportedGraphError);
    CHECK_THROWS_AS(t.backward(a), UnsupportedGraphError); // non-scalar root
    CHECK_THROWS_AS(t.log_(t.constant(Mat::Constant(1, 1, -1.0))), UnsupportedGraphError);
}

TEST_CASE("xavier initialization: bounds, zero biases, determinism") {
    auto shapes = std::vector<LayerShape>{{1, 1, Activation::identity}};
    NetParams one = net_init(shapes, 7);
    const double bound1 = std::sqrt(3.0);
    CHECK(std::abs(one.layers[0].W(0, 0)) <= bound1);
    CHECK(one.layers[0].b(0, 0) == 0.0);

    NetParams again = net_init(shapes, 7);
    CHECK(one.layers[0].W(0, 0) == again.layers[0].W(0, 0));

    auto big = mlp_shapes(70, 1, 70, 70, Activation::tanh);
    double sum = 0.0, sum2 = 0.0;
    long n = 0;
    const double bound70 = std::sqrt(6.0 / 140.0);
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        NetParams net = net_init(big, 1000 + seed);
        for (const auto& l : net.layers) {
            if (l.W.rows() != 70 || l.W.cols() != 70) continue;
            for (int i = 0; i < l.W.size(); ++i) {
                const double w = l.W.data()[i];
                CHECK(std::abs(w) <= bound70);
                sum += w;
                sum2 += w * w;
                ++n;
            }
        }
    }
    REQUIRE(n >= 100000);
    const double mean = sum / static_cast<double>(n);
    const double var = sum2 / static_cast<double>(n) - mean * mean;
    CHECK(std::abs(var - 1.0 / 70.0) <= 0.05 / 70.0);
}

TEST_CASE("net_forward matches closed forms and a hand-rolled evaluation") {
    NetParams id;
    id.layers.push_back({Mat::Identity(3, 3), Mat::Zero(3, 1), Activation::identity});
    Mat x = random_mat(4, 3, 21);
    CHECK((net_forward(id, x) - x).cwiseAbs().maxCoeff() == 0.0);

    NetParams th;
    th.layers.push_back({Mat::Zero(1, 1), Mat::Constant(1, 1, 0.5), Activation::tanh});
    CHECK(net_forward(th, Mat::Constant(1, 1, 3.0))(0, 0) == doctest::Approx(std::tanh(0.5)));

    NetParams net = net_init(mlp_shapes(3, 1, 5, 2, Activation::tanh), 99);
    Mat in = random_mat(1, 3, 22);
    Mat got = net_forward(net, in);
    // independent evaluation with explicit loops
    std::vector<double> h(in.data(), in.data() + 3);
    for (const auto& l : net.layers) {
        std::vector<double> z(static_cast<std::size_t>(l.W.rows()), 0.0);
        for (int r = 0; r < l.W.rows(); ++r) {
            double acc = l.b(r, 0);
            for (int c = 0; c < l.W.cols(); ++c) acc += l.W(r, c) * h[static_cast<std::size_t>(c)];
            if (l.act == Activation::tanh) acc = std::tanh(acc);
            if (l.act == Activation::sin) acc = std::sin(acc);
            z[static_cast<std::size_t>(r)] = acc;
        }
        h = z;
    }
    for (int c = 0; c < 2; ++c)
        CHECK(std::abs(got(0, c) - h[static_cast<std::size_t>(c)]) <= 1e-14);
}

TEST_CASE("net_forward rejects dimension mismatch") {
    NetParams net = net_init(mlp_shapes(3, 1, 5, 2, Activation::tanh), 1);
    CHECK_THROWS_AS(net_forward(net, Mat::Zero(1, 4)), ConfigError);
}

TEST_CASE("loss_gradient: squared weight and linear-net closed forms") {
    NetParams w;
    w.layers.push_back({Mat::Constant(1, 1, 3.0), Mat::Zero(1, 1), Activation::identity});
    auto sq = [](Tape& t, const std::vector<TapeNet>& nets) {
        return t.sum_all(t.square(nets[0].w_nodes[0]));
    };
    auto grads = loss_gradient(sq, {&w});
    CHECK(grads[0].layers[0].W(0, 0) == doctest::Approx(6.0));

    NetParams lin;
    lin.layers.push_back({random_mat(2, 3, 31), Mat::Zero(2, 1), Activation::identity});
    Mat x = random_mat(1, 3, 32);
    auto sum_out = [&](Tape& t, const std::vector<TapeNet>& nets) {
        return t.sum_all(net_forward_on_tape(t, nets[0], t.constant(x)));
    };
    double loss = 0.0;
    grads = loss_gradient(sum_out, {&lin}, &loss);
    CHECK(loss == doctest::Approx((lin.layers[0].W * x.transpose()).sum()));
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 3; ++c)
            CHECK(grads[0].layers[0].W(r, c) == doctest::Approx(x(0, c)));
    CHECK(grads[0].layers[0].b(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("loss_gradient matches central finite differences on a small net") {
    NetParams net = net_init(mlp_shapes(2, 2, 4, 1, Activation::tanh), 5);
    Mat batch = random_mat(6, 2, 41);
    auto builder = [&](Tape& t, const std::vector<TapeNet>& nets) {
        int y = net_forward_on_tape(t, nets[0], t.constant(batch));
        return t.sum_all(t.square(y));
    };
    auto grads = loss_gradient(builder, {&net});

    // finite differences through the independent (non-tape) forward pass
    auto loss_of = [&](const NetParams& p) { return net_forward(p, batch).array().square().sum(); };
    const double h = 1e-5;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        auto check_block = [&](Mat& block, const Mat& gblock) {
            for (int i = 0; i < block.rows(); ++i) {
                for (int j = 0; j < block.cols(); ++j) {
                    const double keep = block(i, j);
                    block(i, j) = keep + h;
                    const double up = loss_of(net);
                    block(i, j) = keep - h;
                    const double dn = loss_of(net);
                    block(i, j) = keep;
                    const double fd = (up - dn) / (2.0 * h);
                    const double scale = std::max({std::abs(fd), std::abs(gblock(i, j)), 1.0});
                    CHECK(std::abs(fd - gblock(i, j)) / scale <= 1e-5);
                }
            }
        };
        check_block(net.layers[li].W, grads[0].layers[li].W);
        check_block(net.layers[li].b, grads[0].layers[li].b);
    }
}

TEST_CASE("loss_gradient couples two networks through one scalar") {
    NetParams a = net_init(mlp_shapes(2, 1, 3, 2, Activation::tanh), 61);
    NetParams b = net_init(mlp_shapes(2, 1, 3, 2, Activation::sin), 62);
    Mat x = random_mat(4, 2, 63);
    auto builder = [&](Tape& t, const std::vector<TapeNet>& nets) {
        int xa = net_forward_on_tape(t, nets[0], t.constant(x));
        int xb = net_forward_on_tape(t, nets[1], t.constant(x));
        return t.sum_all(t.mul(xa, xb));
    };
    auto grads = loss_gradient(builder, {&a, &b});
    REQUIRE(grads.size() == 2);
    CHECK(grads[0].layers[0].W.cwiseAbs().maxCoeff() > 0.0);
    CHECK(grads[1].layers[0].W.cwiseAbs().maxCoeff() > 0.0);

    auto again = loss_gradient(builder, {&a, &b});
    CHECK((grads[0].layers[0].W - again[0].layers[0].W).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adam: zero gradients, first-step closed form, quadratic descent") {
    NetParams net = net_init(mlp_shapes(2, 1, 3, 1, Activation::tanh), 8);
    NetParams before = net;
    AdamState opt(net, {});
    opt.step(net, net.zeros_like());
    CHECK(opt.step_count() == 1);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        CHECK((net.layers[l].W - before.layers[l].W).cwiseAbs().maxCoeff() == 0.0);
        CHECK((net.layers[l].b - before.layers[l].b).cwiseAbs().maxCoeff() == 0.0);
    }

    // first step with gradient g moves the weight by -lr * g / (|g| + eps)
    NetParams w;
    w.layers.push_back({Mat::Constant(1, 1, 1.0), Mat::Zero(1, 1), Activation::identity});
    NetParams g = w.zeros_like();
    g.layers[0].W(0, 0) = 0.37;
    AdamConfig cfg;
    AdamState opt1(w, cfg);
    opt1.step(w, g);
    const double expect = 1.0 - cfg.lr * 0.37 / (0.37 + cfg.eps);
    CHECK(w.layers[0].W(0, 0) == doctest::Approx(expect).epsilon(1e-12));

    // quadratic w^2: compare against an independently scripted recurrence
    NetParams q;
    q.layers.push_back({Mat::Constant(1, 1, 0.5), Mat::Zero(1, 1), Activation::identity});
    cfg.lr = 5e-3;
    AdamState opt2(q, cfg);
    double ref = 0.5, m = 0.0, v = 0.0;
    double prev_abs = 0.5;
    for (int stepi = 1; stepi <= 500; ++stepi) {
        NetParams grad = q.zeros_like();
        grad.layers[0].W(0, 0) = 2.0 * q.layers[0].W(0, 0);
        opt2.step(q, grad);

        const double gr = 2.0 * ref;
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * gr;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * gr * gr;
        const double mh = m / (1.0 - std::pow(cfg.beta1, stepi));
        const double vh = v / (1.0 - std::pow(cfg.beta2, stepi));
        ref -= cfg.lr * mh / (std::sqrt(vh) + cfg.eps);

        CHECK(q.layers[0].W(0, 0) == doctest::Approx(ref).epsilon(1e-12));
        if (stepi <= 150) {
            CHECK(std::abs(q.layers[0].W(0, 0)) <= prev_abs + 1e-15);
            prev_abs = std::abs(q.layers[0].W(0, 0));
        }
    }
    CHECK(std::abs(q.layers[0].W(0, 0)) <= 1e-3 * 0.5);
}

TEST_CASE("adam rejects non-finite gradients naming the layer") {
    NetParams net = net_init(mlp_shapes(2, 1, 3, 1, Activation::tanh), 9);
    NetParams g = net.zeros_like();
    g.layers[1].W(0, 0) = std::numeric_limits<double>::quiet_NaN();
    AdamState opt(net, {});
    try {
        opt.step(net, g);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("layer 1") != std::string::npos);
    }
}

TEST_CASE("checkpoint json round trip is bitwise") {
    NetParams net = net_init(mlp_shapes(3, 2, 7, 2, Activation::sin), 1234);
    net.layers[0].W(0, 0) = 0.1 + 0.2; // a value with a noisy binary tail
    const std::string text = net_to_json(net).dump();
    NetParams back = net_from_json(nlohmann::json::parse(text));
    REQUIRE(back.layers.size() == net.layers.size());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        CHECK((back.layers[l].W - net.layers[l].W).cwiseAbs().maxCoeff() == 0.0);
        CHECK((back.layers[l].b - net.layers[l].b).cwiseAbs().maxCoeff() == 0.0);
        CHECK(back.layers[l].act == net.layers[l].act);
    }
    CHECK(back.parameter_count() == net.parameter_count());
}

TEST_CASE("mlp_shapes chains and ends with identity") {
    auto shapes = mlp_shapes(4, 3, 10, 2, Activation::tanh);
    REQUIRE(shapes.size() == 4);
    CHECK(shapes.front().fan_in == 4);
    CHECK(shapes.back().fan_out == 2);
    CHECK(shapes.back().act == Activation::identity);
    for (std::size_t i = 1; i < shapes.size(); ++i) CHECK(shapes[i].fan_in == shapes[i - 1].fan_out);
    CHECK_THROWS_AS(net_init({{2, 3, Activation::tanh}, {4, 1, Activation::identity}}, 0),
                    ConfigError);
}
