/*
 * articulate - multilinear tongue modelling and articulatory synthesis.
 *
 * File: include/articulate/optimize.hpp
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

#pragma once

#include "articulate/tensor.hpp"

#include <functional>

namespace articulate {

/// Objective callback: returns f(x) and writes the gradient into `grad` (already sized).
using Objective = std::function<double(const Vector& x, Vector& grad)>;

struct BoxOptions
{
    double gradient_tolerance = 1e-6; ///< on the infinity norm of the projected gradient
    int max_iterations = 200;
    int memory = 10;
    double armijo = 1e-4;
    int max_backtracks = 40;
};

struct BoxResult
{
    Vector x;
    double value = 0.0;
    double projected_gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Componentwise clamp into [lower, upper].
Vector project(const Vector& x, const Vector& lower, const Vector& upper);

/// Gradient with components zeroed where a bound is active and the step would leave the box.
Vector projected_gradient(const Vector& x, const Vector& grad, const Vector& lower, const Vector& upper);

/**
 * Limited-memory BFGS with gradient projection onto a box.
 *
 * Variables at a bound whose gradient points outward are frozen for the iteration; the
 * two-loop recursion runs on the free subspace. Steps are projected and accepted by an
 * Armijo backtracking test, so accepted objective values never increase beyond rounding
 * error (near the optimum a step that shrinks the projected gradient is accepted when f is
 * unchanged to within a few ulps). When the quasi-Newton
 * direction fails to descend the iteration falls back to the projected steepest-descent direction.
 *
 * Throws NumericError if the objective returns a non-finite value at an evaluated point.
 */
BoxResult minimize_box(const Objective& objective, const Vector& start, const Vector& lower, const Vector& upper,
                       const BoxOptions& options = {});

} // namespace articulate
