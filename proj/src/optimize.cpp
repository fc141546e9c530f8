/*
 * articulate - multilinear tongue modelling and articulatory synthesis.
 *
 * File: src/optimize.cpp
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

#include "articulate/optimize.hpp"
#include "articulate/errors.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace articulate {

Vector project(const Vector& x, const Vector& lower, const Vector& upper)
{
    return x.cwiseMax(lower).cwiseMin(upper);
}

Vector projected_gradient(const Vector& x, const Vector& grad, const Vector& lower, const Vector& upper)
{
    Vector pg = grad;
    for (Eigen::Index i = 0; i < x.size(); ++i)
    {
        const bool at_lower = x(i) <= lower(i);
        const bool at_upper = x(i) >= upper(i);
        if ((at_lower && grad(i) > 0.0) || (at_upper && grad(i) < 0.0) || (at_lower && at_upper))
        {
            pg(i) = 0.0;
        }
    }
    return pg;
}

namespace {

struct Pair
{
    Vector s;
    Vector y;
};

double masked_dot(const Vector& a, const Vector& b, const Eigen::Array<bool, Eigen::Dynamic, 1>& mask)
{
    double sum = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i)
    {
        if (mask(i))
        {
            sum += a(i) * b(i);
        }
    }
    return sum;
}

// Two-loop recursion restricted to the free variables; returns the (negated) search direction.
Vector quasi_newton_direction(const Vector& grad, const std::deque<Pair>& history,
                              const Eigen::Array<bool, Eigen::Dynamic, 1>& free)
{
    Vector q = grad;
    for (Eigen::Index i = 0; i < q.size(); ++i)
    {
        if (!free(i))
        {
            q(i) = 0.0;
        }
    }
    std::vector<double> alpha(history.size(), 0.0);
    std::vector<double> rho(history.size(), 0.0);
    for (std::size_t k = history.size(); k-- > 0;)
    {
        const double sy = masked_dot(history[k].s, history[k].y, free);
        if (sy <= 0.0)
        {
            continue;
        }
        rho[k] = 1.0 / sy;
        alpha[k] = rho[k] * masked_dot(history[k].s, q, free);
        for (Eigen::Index i = 0; i < q.size(); ++i)
        {
            if (free(i))
            {
                q(i) -= alpha[k] * history[k].y(i);
            }
        }
    }
    double gamma = 1.0;
    for (std::size_t k = history.size(); k-- > 0;)
    {
        if (rho[k] > 0.0)
        {
            const double yy = masked_dot(history[k].y, history[k].y, free);
            if (yy > 0.0)
            {
                gamma = 1.0 / (rho[k] * yy);
            }
            break;
        }
    }
    q *= gamma;
    for (std::size_t k = 0; k < history.size(); ++k)
    {
        if (rho[k] == 0.0)
        {
            continue;
        }
        const double beta = rho[k] * masked_dot(history[k].y, q, free);
        for (Eigen::Index i = 0; i < q.size(); ++i)
        {
            if (free(i))
            {
                q(i) += (alpha[k] - beta) * history[k].s(i);
            }
        }
    }
    return -q;
}

} // namespace

BoxResult minimize_box(const Objective& objective, const Vector& start, const Vector& lower, const Vector& upper,
                       const BoxOptions& options)
{
    if (start.size() != lower.size() || start.size() != upper.size())
    {
        throw ShapeError("minimize_box: start and bounds differ in length");
    }
    if ((lower.array() > upper.array()).any())
    {
        throw NumericError("minimize_box: lower bound exceeds upper bound");
    }
    const Eigen::Index n = start.size();
    auto evaluate = [&](const Vector& x, Vector& g) {
        g.setZero(n);
        const double f = objective(x, g);
        if (!std::isfinite(f) || !g.allFinite())
        {
            throw NumericError("objective is not finite");
        }
        return f;
    };

    BoxResult result;
    Vector x = project(start, lower, upper);
    Vector g(n);
    double f = evaluate(x, g);
    std::deque<Pair> history;

    for (result.iterations = 0; result.iterations < options.max_iterations; ++result.iterations)
    {
        const Vector pg = projected_gradient(x, g, lower, upper);
        if (pg.size() == 0 || pg.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance)
        {
            result.converged = true;
            break;
        }
        Eigen::Array<bool, Eigen::Dynamic, 1> free(n);
        for (Eigen::Index i = 0; i < n; ++i)
        {
            free(i) = pg(i) != 0.0 || (x(i) > lower(i) && x(i) < upper(i));
        }

        bool accepted = false;
        Vector x_new;
        Vector g_new(n);
        double f_new = f;
        // First attempt: quasi-Newton direction. Second: projected steepest descent with fresh memory.
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt)
        {
            Vector d = attempt == 0 ? quasi_newton_direction(g, history, free) : Vector(-pg);
            if (attempt == 0 && d.dot(g) >= 0.0)
            {
                continue;
            }
            double step = 1.0;
            if (attempt == 1 || history.empty())
            {
                step = std::min(1.0, 1.0 / d.norm());
            }
            for (int bt = 0; bt < options.max_backtracks; ++bt, step *= 0.5)
            {
                x_new = project(x + step * d, lower, upper);
                const Vector delta = x_new - x;
                if (delta.lpNorm<Eigen::Infinity>() == 0.0)
                {
                    break;
                }
                f_new = evaluate(x_new, g_new);
                if (f_new <= f + options.armijo * g.dot(delta))
                {
                    accepted = true;
                    break;
                }
                // Near the optimum the sufficient-decrease test drowns in rounding error; a step that
                // leaves f unchanged to rounding and shrinks the projected gradient is still progress.
                const double noise = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f));
                if (f_new <= f + noise && projected_gradient(x_new, g_new, lower, upper).lpNorm<Eigen::Infinity>() <
                                      pg.lpNorm<Eigen::Infinity>())
                {
                    accepted = true;
                    break;
                }
            }
            if (!accepted)
            {
                history.clear();
            }
        }
        if (!accepted)
        {
            break;
        }
        Pair pair{x_new - x, g_new - g};
        const double sy = pair.s.dot(pair.y);
        if (sy > 1e-12 * pair.y.squaredNorm() && sy > 0.0)
        {
            history.push_back(std::move(pair));
            if (static_cast<int>(history.size()) > options.memory)
            {
                history.pop_front();
            }
        }
        x = std::move(x_new);
        g = g_new;
        f = f_new;
    }

    result.x = x;
    result.value = f;
    result.projected_gradient_norm = n == 0 ? 0.0 : projected_gradient(x, g, lower, upper).lpNorm<Eigen::Infinity>();
    if (result.projected_gradient_norm <= options.gradient_tolerance)
    {
        result.converged = true;
    }
    return result;
}

} // namespace articulate
