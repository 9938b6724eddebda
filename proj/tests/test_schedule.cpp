#include <doctest.h>

#include <cmath>

#include "flowlab/error.hpp"
#include "flowlab/schedule.hpp"

using namespace flowlab;
using namespace flowlab::ode;

TEST_CASE("sigmoid grid hits the endpoints exactly") {
    for (double kappa : {1.0, 10.0, 20.0, 30.0, 200.0}) {
        for (std::size_t n : {1, 2, 5, 8, 64}) {
            Schedule s = Schedule::sigmoid(n, kappa);
            CHECK(s.grid.front() == 0.0);
            CHECK(s.grid.back() == 1.0);
        }
    }
}

TEST_CASE("sigmoid grid is symmetric about the midpoint for even N") {
    Schedule s = Schedule::sigmoid(8, 20.0);
    CHECK(s.grid[4] == doctest::Approx(0.5).epsilon(1e-14));
    for (std::size_t i = 0; i <= 8; ++i) {
        CHECK(s.grid[i] == doctest::Approx(1.0 - s.grid[8 - i]).epsilon(1e-12));
    }
}

TEST_CASE("sigmoid converges to the uniform grid as kappa goes to zero") {
    const std::size_t n = 16;
    Schedule s = Schedule::sigmoid(n, 1e-4);
    double worst = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        worst = std::max(worst,
                         std::abs(s.grid[i] - static_cast<double>(i) / static_cast<double>(n)));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("large kappa clusters the grid at both ends") {
    const std::size_t n = 8;
    Schedule s = Schedule::sigmoid(n, 200.0);
    for (std::size_t i = 0; i < n / 2; ++i) CHECK(s.grid[i] < 0.01);
    for (std::size_t i = n / 2 + 1; i <= n; ++i) CHECK(s.grid[i] > 0.99);
}

TEST_CASE("noise-scale grid pins t0 = 0 and tops out below 1") {
    Schedule s = Schedule::edm(18, 0.002, 80.0, 7.0);
    CHECK(s.grid.front() == 0.0);
    CHECK(s.grid.back() == doctest::Approx(80.0 / 81.0).epsilon(1e-12));
    CHECK(s.grid.back() < 1.0);
}

TEST_CASE("all schedules are strictly increasing for every N and kappa") {
    for (std::size_t n = 1; n <= 64; ++n) {
        Schedule u = Schedule::uniform(n);
        Schedule e = Schedule::edm(n);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(u.grid[i] < u.grid[i + 1]);
            CHECK(e.grid[i] < e.grid[i + 1]);
        }
        for (double kappa : {1.0, 10.0, 20.0, 30.0}) {
            Schedule s = Schedule::sigmoid(n, kappa);
            for (std::size_t i = 0; i < n; ++i) CHECK(s.grid[i] < s.grid[i + 1]);
        }
    }
}

TEST_CASE("uniform endpoints are exact") {
    Schedule s = Schedule::uniform(7);
    CHECK(s.grid.front() == 0.0);
    CHECK(s.grid.back() == 1.0);
}

TEST_CASE("invalid parameters are rejected at construction") {
    CHECK_THROWS_AS(Schedule::uniform(0), config_error);
    CHECK_THROWS_AS(Schedule::sigmoid(4, 0.0), config_error);
    CHECK_THROWS_AS(Schedule::sigmoid(4, -3.0), config_error);
    CHECK_THROWS_AS(Schedule::edm(4, 0.0, 80.0, 7.0), config_error);
    CHECK_THROWS_AS(Schedule::edm(4, 2.0, 1.0, 7.0), config_error);
}
