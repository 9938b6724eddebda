#include <doctest.h>

#include <cmath>
#include <cstring>

#include "flowlab/error.hpp"
#include "flowlab/nn.hpp"
#include "flowlab/solver.hpp"

using namespace flowlab;
using namespace flowlab::ode;

namespace {

CallableField linear_field(std::size_t d) {
    // v(x, t) = x; closed-form flow x(t) = x(0) e^t.
    return CallableField(d, [](const Tensor& x, double, Tensor& out) {
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i];
    });
}

SolverCfg make_cfg(Method m, Schedule s, bool forward = false, double r = 1.0,
                   bool economy = true) {
    SolverCfg cfg;
    cfg.method = m;
    cfg.dpm_r = r;
    cfg.schedule = std::move(s);
    cfg.forward = forward;
    cfg.final_step_euler = economy;
    return cfg;
}

double fit_order(const CallableField& field, Method m, double r) {
    // Backward integration of the linear field from x(1) = 1.5 down to
    // t = 0; exact terminal 1.5 / e. Log-log regression of the error.
    std::vector<double> log_n, log_err;
    for (std::size_t n : {8, 16, 32, 64, 128}) {
        SolverCfg cfg = make_cfg(m, Schedule::uniform(n), false, r, false);
        Tensor x({1, 1}, {1.5});
        const double terminal = solve(x, field, cfg).terminal[0];
        const double err = std::abs(terminal - 1.5 * std::exp(-1.0));
        log_n.push_back(std::log(static_cast<double>(n)));
        log_err.push_back(std::log(err));
    }
    const std::size_t k = log_n.size();
    double mx = 0.0, my = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        mx += log_n[i];
        my += log_err[i];
    }
    mx /= static_cast<double>(k);
    my /= static_cast<double>(k);
    for (std::size_t i = 0; i < k; ++i) {
        sxx += (log_n[i] - mx) * (log_n[i] - mx);
        sxy += (log_n[i] - mx) * (log_err[i] - my);
    }
    return -sxy / sxx;  // error ~ N^-order
}

nn::Denoiser frozen_net(std::uint64_t seed) {
    nn::DenoiserConfig cfg;
    cfg.data_dim = 2;
    cfg.hidden = {24, 24};
    cfg.time_embed = nn::TimeEmbedding{6, 32.0};
    cfg.zero_init_output = false;
    Rng rng(seed);
    return nn::Denoiser(cfg, rng);
}

}  // namespace

TEST_CASE("all methods integrate a constant field exactly") {
    Tensor c({2}, {0.7, -1.2});
    ConstantField field(std::move(c));
    Tensor x0({3, 2}, {0.0, 0.0, 1.0, -1.0, 2.0, 0.5});

    for (Method m : {Method::euler, Method::heun, Method::dpm}) {
        for (bool forward : {false, true}) {
            SolverCfg cfg = make_cfg(m, Schedule::sigmoid(6, 10.0), forward, 0.5);
            SolveResult res = solve(x0, field, cfg);
            const double sign = forward ? 1.0 : -1.0;
            for (std::size_t i = 0; i < 3; ++i) {
                CHECK(res.terminal.at(i, 0) ==
                      doctest::Approx(x0.at(i, 0) + sign * 0.7).epsilon(1e-12));
                CHECK(res.terminal.at(i, 1) ==
                      doctest::Approx(x0.at(i, 1) - sign * 1.2).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("heun halves the error by four when the step count doubles") {
    CallableField field = linear_field(1);
    double prev_err = 0.0;
    for (std::size_t n : {8, 16, 32}) {
        SolverCfg cfg = make_cfg(Method::heun, Schedule::uniform(n), false, 1.0, false);
        Tensor x({1, 1}, {1.0});
        const double err = std::abs(solve(x, field, cfg).terminal[0] - std::exp(-1.0));
        if (prev_err > 0.0) CHECK(prev_err / err == doctest::Approx(4.0).epsilon(0.15));
        prev_err = err;
    }
}

TEST_CASE("empirical convergence orders on the linear-field oracle") {
    CallableField field = linear_field(1);
    CHECK(std::abs(fit_order(field, Method::euler, 1.0) - 1.0) < 0.2);
    CHECK(std::abs(fit_order(field, Method::heun, 1.0) - 2.0) < 0.2);
    for (double r : {0.2, 0.4, 0.7, 1.0}) {
        CAPTURE(r);
        CHECK(std::abs(fit_order(field, Method::dpm, r) - 2.0) < 0.2);
    }
}

TEST_CASE("dpm with r = 1 reproduces heun bit-for-bit on a frozen net") {
    nn::Denoiser net = frozen_net(77);
    DenoiserVelocity field(net);
    Rng rng(78);
    Tensor x1({16, 2});
    for (std::size_t i = 0; i < x1.size(); ++i) x1[i] = rng.normal();

    for (bool economy : {true, false}) {
        SolverCfg heun_cfg = make_cfg(Method::heun, Schedule::sigmoid(8, 10.0), false, 1.0,
                                      economy);
        heun_cfg.record_trajectory = true;
        SolverCfg dpm_cfg = make_cfg(Method::dpm, Schedule::sigmoid(8, 10.0), false, 1.0,
                                     economy);
        dpm_cfg.record_trajectory = true;

        SolveResult a = solve(x1, field, heun_cfg);
        SolveResult b = solve(x1, field, dpm_cfg);
        REQUIRE(a.trajectory.size() == b.trajectory.size());
        for (std::size_t k = 0; k < a.trajectory.size(); ++k) {
            CHECK(std::memcmp(a.trajectory[k].data(), b.trajectory[k].data(),
                              a.trajectory[k].size() * sizeof(double)) == 0);
        }
        CHECK(std::memcmp(a.terminal.data(), b.terminal.data(),
                          a.terminal.size() * sizeof(double)) == 0);
    }
}

TEST_CASE("nfe accounting matches the declared counts") {
    nn::Denoiser net = frozen_net(79);
    DenoiserVelocity field(net);
    Rng rng(80);
    Tensor x({4, 2});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.normal();

    struct Case {
        Method m;
        bool forward;
        bool economy;
        std::size_t n;
        std::size_t expect;
    };
    const Case cases[] = {
        {Method::euler, false, true, 8, 8},
        {Method::heun, false, true, 5, 9},   // 4 two-stage steps + final Euler
        {Method::heun, false, false, 5, 10},
        {Method::heun, true, true, 5, 10},   // economy only applies toward t = 0
        {Method::dpm, false, true, 5, 9},
    };
    for (const auto& c : cases) {
        SolverCfg cfg = make_cfg(c.m, Schedule::uniform(c.n), c.forward, 0.4, c.economy);
        SolveResult res = solve(x, field, cfg);
        CAPTURE(method_name(c.m));
        CHECK(res.nfe == c.expect);
        CHECK(expected_nfe(cfg) == c.expect);
    }
}

TEST_CASE("guidance combinations") {
    Tensor a({1}, {2.0}), b({1}, {0.5});
    ConstantField main_field(a), aux_field(b);

    SUBCASE("zero scale returns the main velocity") {
        GuidedField guided(main_field, aux_field, 0.0);
        Tensor x({1, 1}, {0.0}), out({1, 1});
        guided.eval(x, 0.5, out);
        CHECK(out[0] == 2.0);
    }
    SUBCASE("identical auxiliary cancels at any scale") {
        GuidedField guided(main_field, main_field, 3.7);
        Tensor x({1, 1}, {0.0}), out({1, 1});
        guided.eval(x, 0.5, out);
        CHECK(out[0] == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("unit scale on constants gives 2a - b") {
        GuidedField guided(main_field, aux_field, 1.0);
        Tensor x({1, 1}, {0.0}), out({1, 1});
        guided.eval(x, 0.5, out);
        CHECK(out[0] == doctest::Approx(2.0 * 2.0 - 0.5).epsilon(1e-12));
    }
    SUBCASE("guided solve at g = 0 equals the unguided trajectory") {
        nn::Denoiser net = frozen_net(81);
        DenoiserVelocity vmain(net);
        nn::Denoiser net2 = frozen_net(82);
        DenoiserVelocity vaux(net2);
        GuidedField guided(vmain, vaux, 0.0);
        Rng rng(83);
        Tensor x({8, 2});
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.normal();
        SolverCfg cfg = make_cfg(Method::heun, Schedule::sigmoid(6, 10.0));
        SolveResult with_g = solve(x, guided, cfg);
        SolveResult without = solve(x, vmain, cfg);
        CHECK(std::memcmp(with_g.terminal.data(), without.terminal.data(),
                          with_g.terminal.size() * sizeof(double)) == 0);
    }
    SUBCASE("autoguidance rejects mismatched dimensions") {
        nn::Denoiser net2d = frozen_net(84);
        nn::DenoiserConfig cfg1;
        cfg1.data_dim = 3;
        Rng r(85);
        nn::Denoiser net3d(cfg1, r);
        CHECK_THROWS_AS(AutoguidancePair(net2d, net3d, 1.0), shape_error);
    }
}

TEST_CASE("truncation error vanishes on constant fields") {
    Tensor c({2}, {1.0, -2.0});
    ConstantField field(std::move(c));
    Rng rng(86);
    Tensor x0({8, 2}), x1({8, 2});
    for (std::size_t i = 0; i < x0.size(); ++i) {
        x0[i] = rng.normal();
        x1[i] = rng.normal();
    }
    std::vector<double> tau = truncation_error(field, Schedule::uniform(6), x0, x1);
    for (double v : tau) CHECK(v < 1e-13);
}

TEST_CASE("truncation error has the leading h^2/2 coefficient on the linear field") {
    CallableField field = linear_field(1);
    // Constant pairs keep x_{t} = 1 on every interval.
    Tensor x0({1, 1}, {1.0}), x1({1, 1}, {1.0});
    std::vector<double> tau8 = truncation_error(field, Schedule::uniform(8), x0, x1);
    std::vector<double> tau16 = truncation_error(field, Schedule::uniform(16), x0, x1);
    const double h8 = 1.0 / 8.0, h16 = 1.0 / 16.0;
    CHECK(tau8[3] == doctest::Approx(h8 * h8 / 2.0).epsilon(0.05));
    CHECK(tau16[5] == doctest::Approx(h16 * h16 / 2.0).epsilon(0.05));
    // Halving the step size cuts the local error by about four.
    CHECK(tau8[2] / tau16[4] == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("non-finite states throw with the step index or get flagged") {
    CallableField exploding(1, [](const Tensor& x, double, Tensor& out) {
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * 1e200;
    });
    Tensor x({2, 1}, {1.0, 0.0});
    SolverCfg cfg = make_cfg(Method::euler, Schedule::uniform(4), true);
    CHECK_THROWS_AS(solve(x, exploding, cfg), numeric_error);

    SolveResult res = solve_flagging_nonfinite(x, exploding, cfg);
    CHECK(res.n_nonfinite == 1);
    CHECK(res.finite[0] == 0);
    CHECK(res.finite[1] == 1);  // the zero row stays finite
}

TEST_CASE("trajectory recording covers every knot in traversal order") {
    Tensor c({1}, {1.0});
    ConstantField field(std::move(c));
    Tensor x({1, 1}, {0.0});
    SolverCfg cfg = make_cfg(Method::heun, Schedule::uniform(4));
    cfg.record_trajectory = true;
    SolveResult res = solve(x, field, cfg);
    REQUIRE(res.times.size() == 5);
    REQUIRE(res.trajectory.size() == 5);
    CHECK(res.times.front() == 1.0);
    CHECK(res.times.back() == 0.0);
    CHECK(res.trajectory.front()[0] == 0.0);
    CHECK(res.terminal[0] == doctest::Approx(-1.0).epsilon(1e-12));
}
