/*
 * articulate - multilinear tongue modelling and articulatory synthesis.
 *
 * File: src/tensor.cpp
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

#include "articulate/tensor.hpp"
#include "articulate/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace articulate {

namespace {

void check_mode(int mode)
{
    if (mode < 1 || mode > 3)
    {
        throw ShapeError("tensor mode must be 1, 2 or 3, got " + std::to_string(mode));
    }
}

// Maps (row, col) of a mode-n unfolding to the (i, j, k) tensor index.
std::array<std::size_t, 3> unfold_index(int mode, std::size_t row, std::size_t col,
                                        const std::array<std::size_t, 3>& d)
{
    switch (mode)
    {
    case 1:
        return {row, col / d[2], col % d[2]};
    case 2:
        return {col / d[2], row, col % d[2]};
    default:
        return {col / d[1], col % d[1], row};
    }
}

std::size_t unfold_cols(int mode, const std::array<std::size_t, 3>& d)
{
    switch (mode)
    {
    case 1:
        return d[1] * d[2];
    case 2:
        return d[0] * d[2];
    default:
        return d[0] * d[1];
    }
}

// Replaces null columns (flagged in `valid`) of q with unit vectors orthogonalised against the
// other columns. Candidates are tried in index order, so the completion is deterministic.
void complete_orthonormal(Matrix& q, std::vector<bool>& valid)
{
    const Eigen::Index n = q.rows();
    Eigen::Index candidate = 0;
    for (Eigen::Index c = 0; c < q.cols(); ++c)
    {
        if (valid[static_cast<std::size_t>(c)])
        {
            continue;
        }
        for (; candidate < n; ++candidate)
        {
            Vector e = Vector::Unit(n, candidate);
            // Two Gram-Schmidt passes for numerical orthogonality.
            for (int pass = 0; pass < 2; ++pass)
            {
                for (Eigen::Index o = 0; o < q.cols(); ++o)
                {
                    if (valid[static_cast<std::size_t>(o)])
                    {
                        e -= q.col(o).dot(e) * q.col(o);
                    }
                }
            }
            const double norm = e.norm();
            if (norm > 1e-6)
            {
                q.col(c) = e / norm;
                valid[static_cast<std::size_t>(c)] = true;
                ++candidate;
                break;
            }
        }
    }
}

} // namespace

Tensor3::Tensor3(std::size_t d1, std::size_t d2, std::size_t d3) : dims_{d1, d2, d3}, data_(d1 * d2 * d3, 0.0) {}

Tensor3::Tensor3(std::array<std::size_t, 3> dims, std::vector<double> data) : dims_(dims), data_(std::move(data))
{
    if (data_.size() != dims_[0] * dims_[1] * dims_[2])
    {
        throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match dims");
    }
}

double Tensor3::frobenius_norm() const
{
    double sum = 0.0;
    for (double x : data_)
    {
        sum += x * x;
    }
    return std::sqrt(sum);
}

Matrix mode_unfold(const Tensor3& t, int mode)
{
    check_mode(mode);
    const auto& d = t.dims();
    const std::size_t rows = d[static_cast<std::size_t>(mode - 1)];
    const std::size_t cols = unfold_cols(mode, d);
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r)
    {
        for (std::size_t c = 0; c < cols; ++c)
        {
            const auto idx = unfold_index(mode, r, c, d);
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = t(idx[0], idx[1], idx[2]);
        }
    }
    return m;
}

Tensor3 fold(const Matrix& m, int mode, const std::array<std::size_t, 3>& dims)
{
    check_mode(mode);
    const std::size_t rows = dims[static_cast<std::size_t>(mode - 1)];
    const std::size_t cols = unfold_cols(mode, dims);
    if (static_cast<std::size_t>(m.rows()) != rows || static_cast<std::size_t>(m.cols()) != cols)
    {
        throw ShapeError("fold: matrix is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                         ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
    }
    Tensor3 t(dims[0], dims[1], dims[2]);
    for (std::size_t r = 0; r < rows; ++r)
    {
        for (std::size_t c = 0; c < cols; ++c)
        {
            const auto idx = unfold_index(mode, r, c, dims);
            t(idx[0], idx[1], idx[2]) = m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        }
    }
    return t;
}

Tensor3 mode_multiply(const Tensor3& t, const Matrix& u, int mode)
{
    check_mode(mode);
    const auto& d = t.dims();
    if (static_cast<std::size_t>(u.cols()) != t.dim(mode))
    {
        throw ShapeError("mode_multiply: matrix has " + std::to_string(u.cols()) + " columns, tensor mode " +
                         std::to_string(mode) + " has size " + std::to_string(t.dim(mode)));
    }
    auto out_dims = d;
    out_dims[static_cast<std::size_t>(mode - 1)] = static_cast<std::size_t>(u.rows());
    Tensor3 out(out_dims[0], out_dims[1], out_dims[2]);
    const auto rows = static_cast<std::size_t>(u.rows());

    // Loops are arranged so the innermost index walks contiguous memory; the reduction over the
    // contracted index always runs in ascending order.
    switch (mode)
    {
    case 1:
        for (std::size_t a = 0; a < rows; ++a)
        {
            for (std::size_t i = 0; i < d[0]; ++i)
            {
                const double w = u(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(i));
                for (std::size_t j = 0; j < d[1]; ++j)
                {
                    for (std::size_t k = 0; k < d[2]; ++k)
                    {
                        out(a, j, k) += w * t(i, j, k);
                    }
                }
            }
        }
        break;
    case 2:
        for (std::size_t i = 0; i < d[0]; ++i)
        {
            for (std::size_t b = 0; b < rows; ++b)
            {
                for (std::size_t j = 0; j < d[1]; ++j)
                {
                    const double w = u(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j));
                    for (std::size_t k = 0; k < d[2]; ++k)
                    {
                        out(i, b, k) += w * t(i, j, k);
                    }
                }
            }
        }
        break;
    default:
        for (std::size_t i = 0; i < d[0]; ++i)
        {
            for (std::size_t j = 0; j < d[1]; ++j)
            {
                for (std::size_t c = 0; c < rows; ++c)
                {
                    double sum = 0.0;
                    for (std::size_t k = 0; k < d[2]; ++k)
                    {
                        sum += u(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) * t(i, j, k);
                    }
                    out(i, j, c) = sum;
                }
            }
        }
        break;
    }
    return out;
}

SvdResult svd(const Matrix& m)
{
    if (!m.allFinite())
    {
        throw NumericError("svd: matrix contains non-finite entries");
    }
    // Orthogonalise the columns of b (n x k, n >= k). For wide inputs b = m^T so that the
    // accumulated rotation matrix becomes the square left factor.
    const bool wide = m.rows() <= m.cols();
    Matrix b = wide ? Matrix(m.transpose()) : m;
    const Eigen::Index k = b.cols();
    Matrix rot = Matrix::Identity(k, k);

    constexpr double tolerance = 1e-12;
    constexpr int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps; ++sweep)
    {
        bool rotated = false;
        for (Eigen::Index p = 0; p + 1 < k; ++p)
        {
            for (Eigen::Index q = p + 1; q < k; ++q)
            {
                const double alpha = b.col(p).squaredNorm();
                const double beta = b.col(q).squaredNorm();
                const double gamma = b.col(p).dot(b.col(q));
                if (gamma == 0.0 || std::abs(gamma) <= tolerance * std::sqrt(alpha * beta))
                {
                    continue;
                }
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (Eigen::Index r = 0; r < b.rows(); ++r)
                {
                    const double bp = b(r, p);
                    const double bq = b(r, q);
                    b(r, p) = c * bp - s * bq;
                    b(r, q) = s * bp + c * bq;
                }
                for (Eigen::Index r = 0; r < k; ++r)
                {
                    const double vp = rot(r, p);
                    const double vq = rot(r, q);
                    rot(r, p) = c * vp - s * vq;
                    rot(r, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated)
        {
            break;
        }
    }

    Vector sigma(k);
    for (Eigen::Index c = 0; c < k; ++c)
    {
        sigma(c) = b.col(c).norm();
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index c) { return sigma(a) > sigma(c); });

    const double largest = k > 0 ? sigma(order.front()) : 0.0;
    const double null_threshold = largest * 1e-14 * static_cast<double>(std::max(b.rows(), k));

    Matrix normalized(b.rows(), k);
    Matrix rotation(k, k);
    Vector sorted(k);
    std::vector<bool> valid(static_cast<std::size_t>(k), true);
    for (Eigen::Index c = 0; c < k; ++c)
    {
        const Eigen::Index src = order[static_cast<std::size_t>(c)];
        sorted(c) = sigma(src);
        rotation.col(c) = rot.col(src);
        if (sigma(src) > null_threshold && sigma(src) > 0.0)
        {
            normalized.col(c) = b.col(src) / sigma(src);
        }
        else
        {
            normalized.col(c).setZero();
            valid[static_cast<std::size_t>(c)] = false;
        }
    }
    complete_orthonormal(normalized, valid);

    SvdResult result;
    result.s = sorted;
    if (wide)
    {
        result.u = rotation;
        result.v = normalized;
    }
    else
    {
        result.u = normalized;
        result.v = rotation;
    }
    for (Eigen::Index c = 0; c < k; ++c)
    {
        Eigen::Index arg = 0;
        result.u.col(c).cwiseAbs().maxCoeff(&arg);
        if (result.u(arg, c) < 0.0)
        {
            result.u.col(c) *= -1.0;
            result.v.col(c) *= -1.0;
        }
    }
    return result;
}

namespace {

// Full d x d left factor of an unfolding; thin SVD only yields min(rows, cols) columns.
Matrix left_factor(const Matrix& unfolding)
{
    const SvdResult r = svd(unfolding);
    const Eigen::Index n = unfolding.rows();
    if (r.u.cols() == n)
    {
        return r.u;
    }
    Matrix full(n, n);
    full.leftCols(r.u.cols()) = r.u;
    std::vector<bool> valid(static_cast<std::size_t>(n), false);
    std::fill(valid.begin(), valid.begin() + r.u.cols(), true);
    complete_orthonormal(full, valid);
    return full;
}

} // namespace

HosvdResult hosvd(const Tensor3& t)
{
    for (double x : t.data())
    {
        if (!std::isfinite(x))
        {
            throw NumericError("hosvd: tensor contains non-finite entries");
        }
    }
    if (t.size() == 0)
    {
        throw ShapeError("hosvd: empty tensor");
    }
    HosvdResult result;
    result.u1 = left_factor(mode_unfold(t, 1));
    result.u2 = left_factor(mode_unfold(t, 2));
    result.core = mode_multiply(mode_multiply(t, result.u1.transpose(), 1), result.u2.transpose(), 2);
    return result;
}

} // namespace articulate
