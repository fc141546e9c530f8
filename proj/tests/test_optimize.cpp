/*
 * articulate - multilinear tongue modelling and articulatory synthesis.
 *
 * File: tests/test_optimize.cpp
 *
 * Copyright 2026 The articulate authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "articulate/errors.hpp"
#include "articulate/optimize.hpp"
#include "oracles.hpp"

#include <cmath>
#include <limits>

using namespace articulate;

namespace {

// f(x) = 0.5 x'Ax - b'x with A symmetric positive definite.
Objective quadratic(const Matrix& a, const Vector& b)
{
    return [a, b](const Vector& x, Vector& g) {
        g = a * x - b;
        return 0.5 * x.dot(a * x) - b.dot(x);
    };
}

Matrix spd(std::mt19937_64& rng, Eigen::Index n)
{
    const Matrix m = oracle::random_matrix(rng, n, n);
    return m * m.transpose() + Matrix::Identity(n, n);
}

} // namespace

TEST_CASE("projection helpers")
{
    Vector lo(3), hi(3), x(3), g(3);
    lo << -1, -1, -1;
    hi << 1, 1, 1;
    x << -2, 0.5, 3;
    CHECK(project(x, lo, hi) == Vector((Vector(3) << -1, 0.5, 1).finished()));
    x << -1, 0.5, 1;
    g << 2, 3, -4; // a descent step would leave the box through both active bounds
    const Vector pg = projected_gradient(x, g, lo, hi);
    CHECK(pg(0) == 0);
    CHECK(pg(1) == 3);
    CHECK(pg(2) == 0);
    g << -2, 3, 4; // both active components now point into the box
    const Vector pg2 = projected_gradient(x, g, lo, hi);
    CHECK(pg2(0) == -2);
    CHECK(pg2(2) == 4);
}

TEST_CASE("unconstrained quadratic matches the dense solve")
{
    auto rng = oracle::make_rng(21);
    for (int trial = 0; trial < 20; ++trial)
    {
        const Eigen::Index n = 2 + trial % 9;
        const Matrix a = spd(rng, n);
        const Vector b = oracle::random_vector(rng, n);
        const Vector inf = Vector::Constant(n, std::numeric_limits<double>::infinity());
        BoxOptions opts;
        opts.gradient_tolerance = 1e-9;
        opts.max_iterations = 1000;
        const BoxResult r = minimize_box(quadratic(a, b), Vector::Zero(n), -inf, inf, opts);
        INFO("iterations ", r.iterations, " pg ", r.projected_gradient_norm);
        CHECK(r.converged);
        CHECK((r.x - oracle::dense_solve(a, b)).cwiseAbs().maxCoeff() <= 1e-7);
    }
}

TEST_CASE("separable quadratic with active bounds lands on the clamped minimiser")
{
    auto rng = oracle::make_rng(22);
    for (int trial = 0; trial < 20; ++trial)
    {
        const Eigen::Index n = 6;
        Vector d(n);
        for (Eigen::Index i = 0; i < n; ++i)
        {
            d(i) = oracle::uniform(rng, 0.5, 5.0);
        }
        const Vector target = oracle::random_vector(rng, n, -3, 3);
        const Matrix a = d.asDiagonal();
        const Vector lo = Vector::Constant(n, -1.0);
        const Vector hi = Vector::Constant(n, 1.0);
        BoxOptions opts;
        opts.gradient_tolerance = 1e-10;
        const BoxResult r = minimize_box(quadratic(a, a * target), oracle::random_vector(rng, n), lo, hi, opts);
        INFO("iterations ", r.iterations, " pg ", r.projected_gradient_norm);
        CHECK(r.converged);
        for (Eigen::Index i = 0; i < n; ++i)
        {
            CHECK(r.x(i) == doctest::Approx(std::clamp(target(i), -1.0, 1.0)).epsilon(1e-9));
            CHECK(r.x(i) >= -1.0);
            CHECK(r.x(i) <= 1.0);
        }
    }
}

TEST_CASE("coupled quadratic with bounds satisfies the KKT conditions")
{
    auto rng = oracle::make_rng(23);
    for (int trial = 0; trial < 20; ++trial)
    {
        const Eigen::Index n = 8;
        const Matrix a = spd(rng, n);
        const Vector b = oracle::random_vector(rng, n, -6, 6);
        const Vector lo = Vector::Constant(n, -0.5);
        const Vector hi = Vector::Constant(n, 0.5);
        BoxOptions opts;
        opts.gradient_tolerance = 1e-9;
        opts.max_iterations = 2000;
        const BoxResult r = minimize_box(quadratic(a, b), Vector::Zero(n), lo, hi, opts);
        CHECK(r.converged);
        const Vector g = a * r.x - b;
        for (Eigen::Index i = 0; i < n; ++i)
        {
            if (r.x(i) <= lo(i))
            {
                CHECK(g(i) >= -1e-8);
            }
            else if (r.x(i) >= hi(i))
            {
                CHECK(g(i) <= 1e-8);
            }
            else
            {
                CHECK(std::abs(g(i)) <= 1e-8);
            }
        }
    }
}

TEST_CASE("Rosenbrock inside a box")
{
    const Objective rosen = [](const Vector& x, Vector& g) {
        const double a = 1.0 - x(0);
        const double b = x(1) - x(0) * x(0);
        g(0) = -2.0 * a - 400.0 * x(0) * b;
        g(1) = 200.0 * b;
        return a * a + 100.0 * b * b;
    };
    Vector lo(2), hi(2), start(2);
    lo << -2, -2;
    hi << 2, 2;
    start << -1.2, 1.0;
    BoxOptions opts;
    opts.max_iterations = 500;
    opts.gradient_tolerance = 1e-9;
    const BoxResult r = minimize_box(rosen, start, lo, hi, opts);
    CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.x(1) == doctest::Approx(1.0).epsilon(1e-6));

    hi << 0.5, 2;
    const BoxResult c = minimize_box(rosen, start, lo, hi, opts);
    CHECK(c.x(0) == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(c.x(1) == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("non-finite objective values raise a numeric error")
{
    const Objective bad = [](const Vector& x, Vector& g) {
        g = x;
        return std::numeric_limits<double>::quiet_NaN();
    };
    CHECK_THROWS_AS(minimize_box(bad, Vector::Ones(2), -Vector::Ones(2) * 5, Vector::Ones(2) * 5), NumericError);
}
