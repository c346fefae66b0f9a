#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <limits>
#include <stdexcept>

#include "coxrs/step_function.hpp"

using coxrs::StepFunction;

TEST_CASE("construction validates shape") {
    CHECK_NOTHROW(StepFunction({1.0, 2.0}, {0.5, 1.5}));
    CHECK_THROWS_AS(StepFunction({1.0}, {0.5, 1.5}), std::invalid_argument);
    CHECK_THROWS_AS(StepFunction({2.0, 1.0}, {0.5, 1.5}), std::invalid_argument);
    CHECK_THROWS_AS(StepFunction({1.0, 1.0}, {0.5, 1.5}), std::invalid_argument);
    CHECK_THROWS_AS(StepFunction({1.0, 2.0}, {1.5, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(StepFunction({-1.0, 2.0}, {0.5, 1.5}), std::invalid_argument);
    CHECK_THROWS_AS(StepFunction({1.0}, {-0.5}), std::invalid_argument);
}

TEST_CASE("evaluation is right-continuous with 0 before the first jump") {
    const StepFunction f({1.0, 2.0, 4.0}, {0.5, 1.5, 1.5});
    CHECK(f.eval(0.0) == 0.0);
    CHECK(f.eval(0.999) == 0.0);
    CHECK(f.eval(1.0) == 0.5);
    CHECK(f.eval(1.5) == 0.5);
    CHECK(f.eval(2.0) == 1.5);
    CHECK(f.eval(100.0) == 1.5);
    CHECK(f.total() == 1.5);
    CHECK(f.last_time() == 4.0);
}

TEST_CASE("generalized inverse") {
    const StepFunction f({1.0, 2.0}, {0.5, 1.5});
    CHECK(f.inv(0.0) == 0.0);
    CHECK(f.inv(-3.0) == 0.0);
    CHECK(f.inv(0.3) == 1.0);
    CHECK(f.inv(0.5) == 1.0);
    CHECK(f.inv(0.6) == 2.0);
    CHECK(f.inv(1.5) == 2.0);
    CHECK(f.inv(1.5000001) == std::numeric_limits<double>::infinity());

    for (double t : {1.0, 2.0}) CHECK(f.eval(f.inv(f.eval(t))) == f.eval(t));
    // inv(eval(t)) <= t at jump points.
    for (double t : {1.0, 2.0}) CHECK(f.inv(f.eval(t)) <= t);
}

TEST_CASE("empty function") {
    const StepFunction f;
    CHECK(f.empty());
    CHECK(f.eval(5.0) == 0.0);
    CHECK(f.total() == 0.0);
    CHECK(f.inv(0.1) == std::numeric_limits<double>::infinity());
}

TEST_CASE("from_increments sorts, merges ties, drops zeros") {
    const StepFunction f = StepFunction::from_increments(
        {{2.0, 0.25}, {1.0, 0.5}, {2.0, 0.25}, {3.0, 0.0}});
    REQUIRE(f.size() == 2);
    CHECK(f.jump_times()[0] == 1.0);
    CHECK(f.jump_times()[1] == 2.0);
    CHECK(f.cumulative_values()[0] == 0.5);
    CHECK(f.cumulative_values()[1] == 1.0);
}

TEST_CASE("scaling") {
    const StepFunction f({1.0, 2.0}, {0.5, 1.5});
    const StepFunction g = f.scaled(2.0);
    CHECK(g.eval(1.0) == 1.0);
    CHECK(g.eval(2.0) == 3.0);
    CHECK(g.jump_times() == f.jump_times());
}
