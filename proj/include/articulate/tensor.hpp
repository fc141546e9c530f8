/*
 * articulate - multilinear tongue modelling and articulatory synthesis.
 *
 * File: include/articulate/tensor.hpp
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

#include "Eigen/Core"

#include <array>
#include <cstddef>
#include <vector>

namespace articulate {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/**
 * Dense third-order tensor.
 *
 * Entry (i, j, k) lives at data[i * d2 * d3 + j * d3 + k]. Every unfolding
 * and serialisation in the library derives from this order.
 */
class Tensor3
{
public:
    Tensor3() = default;
    Tensor3(std::size_t d1, std::size_t d2, std::size_t d3);
    Tensor3(std::array<std::size_t, 3> dims, std::vector<double> data);

    const std::array<std::size_t, 3>& dims() const noexcept { return dims_; }
    std::size_t dim(int mode) const { return dims_.at(static_cast<std::size_t>(mode - 1)); }
    std::size_t size() const noexcept { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j, std::size_t k) { return data_[(i * dims_[1] + j) * dims_[2] + k]; }
    double operator()(std::size_t i, std::size_t j, std::size_t k) const
    {
        return data_[(i * dims_[1] + j) * dims_[2] + k];
    }

    const std::vector<double>& data() const noexcept { return data_; }
    std::vector<double>& data() noexcept { return data_; }

    double frobenius_norm() const;

    friend bool operator==(const Tensor3&, const Tensor3&) = default;

private:
    std::array<std::size_t, 3> dims_{0, 0, 0};
    std::vector<double> data_;
};

/**
 * Mode-n unfolding (n in {1,2,3}) as a d_n x (product of the other two) matrix.
 *
 * Column order keeps the remaining indices in linearisation order:
 * mode 1 columns are j * d3 + k, mode 2 columns are i * d3 + k and mode 3
 * columns are i * d2 + j.
 */
Matrix mode_unfold(const Tensor3& t, int mode);

/// Inverse of mode_unfold for a tensor of the given dims.
Tensor3 fold(const Matrix& m, int mode, const std::array<std::size_t, 3>& dims);

/// t x_n u: replaces dims[mode] with u.rows(). Throws ShapeError if u.cols() != t.dim(mode).
Tensor3 mode_multiply(const Tensor3& t, const Matrix& u, int mode);

struct SvdResult
{
    Matrix u; ///< rows x k, orthonormal columns
    Vector s; ///< k singular values, non-increasing
    Matrix v; ///< cols x k, orthonormal columns
};

/**
 * Thin singular value decomposition by one-sided Jacobi rotations, k = min(rows, cols).
 *
 * Sweeps run until every column pair satisfies |a_i . a_j| <= 1e-12 * |a_i| |a_j|.
 * Singular values are sorted descending with ties kept in original column order.
 * Each left singular vector is flipped so that its largest-magnitude entry (first one on
 * ties) is positive; the right vector follows. Null-space columns are completed to an
 * orthonormal basis deterministically.
 */
SvdResult svd(const Matrix& m);

struct HosvdResult
{
    Tensor3 core;
    Matrix u1; ///< d1 x d1
    Matrix u2; ///< d2 x d2
};

/// Two-mode HOSVD: t = core x1 u1 x2 u2, the third mode is left unfactored.
HosvdResult hosvd(const Tensor3& t);

} // namespace articulate
