#pragma once

// Dense row-major matrices over arbitrary-precision integers.

#include "trcalc/errors.hpp"
#include "trcalc/integer.hpp"

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

namespace trcalc {

class IntMatrix {
public:
    IntMatrix() = default;
    IntMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, Integer(0)) {}

    static IntMatrix from_rows(const std::vector<std::vector<Integer>>& rows)
    {
        IntMatrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != m.cols_)
                throw ValidationError("IntMatrix: ragged rows");
            for (std::size_t c = 0; c < m.cols_; ++c)
                m(r, c) = rows[r][c];
        }
        return m;
    }

    static IntMatrix identity(std::size_t n)
    {
        IntMatrix m(n, n);
        for (std::size_t k = 0; k < n; ++k)
            m(k, k) = 1;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    Integer& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const Integer& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    bool is_zero() const
    {
        for (const auto& x : data_)
            if (sgn(x) != 0)
                return false;
        return true;
    }

    friend bool operator==(const IntMatrix& a, const IntMatrix& b)
    {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Integer> data_;
};

inline IntMatrix operator*(const IntMatrix& a, const IntMatrix& b)
{
    if (a.cols() != b.rows())
        throw ValidationError("matrix product: dimension mismatch");
    IntMatrix out(a.rows(), b.cols());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            if (sgn(a(r, k)) == 0)
                continue;
            for (std::size_t c = 0; c < b.cols(); ++c)
                out(r, c) += a(r, k) * b(k, c);
        }
    return out;
}

inline std::vector<Integer> operator*(const IntMatrix& a, const std::vector<Integer>& x)
{
    if (a.cols() != x.size())
        throw ValidationError("matrix-vector product: dimension mismatch");
    std::vector<Integer> out(a.rows(), Integer(0));
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c)
            out[r] += a(r, c) * x[c];
    return out;
}

inline IntMatrix operator-(const IntMatrix& a)
{
    IntMatrix out = a;
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c)
            out(r, c) = -a(r, c);
    return out;
}

inline IntMatrix reduce_mod(const IntMatrix& a, const Integer& modulus)
{
    IntMatrix out = a;
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c)
            out(r, c) = mod(a(r, c), modulus);
    return out;
}

/// [top; bottom]
inline IntMatrix vstack(const IntMatrix& top, const IntMatrix& bottom)
{
    if (top.cols() != bottom.cols())
        throw ValidationError("vstack: column mismatch");
    IntMatrix out(top.rows() + bottom.rows(), top.cols());
    for (std::size_t r = 0; r < top.rows(); ++r)
        for (std::size_t c = 0; c < top.cols(); ++c)
            out(r, c) = top(r, c);
    for (std::size_t r = 0; r < bottom.rows(); ++r)
        for (std::size_t c = 0; c < top.cols(); ++c)
            out(top.rows() + r, c) = bottom(r, c);
    return out;
}

/// [left, right]
inline IntMatrix hstack(const IntMatrix& left, const IntMatrix& right)
{
    if (left.rows() != right.rows())
        throw ValidationError("hstack: row mismatch");
    IntMatrix out(left.rows(), left.cols() + right.cols());
    for (std::size_t r = 0; r < left.rows(); ++r) {
        for (std::size_t c = 0; c < left.cols(); ++c)
            out(r, c) = left(r, c);
        for (std::size_t c = 0; c < right.cols(); ++c)
            out(r, left.cols() + c) = right(r, c);
    }
    return out;
}

/// 64-bit FNV-1a over the dimensions and decimal entries, as 16 hex digits.
inline std::string matrix_hash(const IntMatrix& m)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto feed = [&](const std::string& s) {
        for (unsigned char ch : s) {
            h ^= ch;
            h *= 0x100000001b3ull;
        }
        h ^= 0xff;
        h *= 0x100000001b3ull;
    };
    feed(std::to_string(m.rows()));
    feed(std::to_string(m.cols()));
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c)
            feed(m(r, c).get_str());
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace trcalc
