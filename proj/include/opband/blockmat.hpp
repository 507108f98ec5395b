#pragma once
//
// B(H)-valued matrices over a finite index set with H = C^m.
//
// The matrix is sparse in (k,l); each stored block is a dense m x m array in
// column-major order. Absent entries are exact zeros.
//

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "parallel.hpp"
#include "pointset.hpp"

namespace opband {

using Complex = std::complex<double>;
using Block = Eigen::MatrixXcd;
using ConstBlockMap = Eigen::Map<const Eigen::MatrixXcd>;

namespace detail {
// True when B^H precedes B in lexicographic (re, im) order of column-major entries.
inline bool adjoint_precedes(const Complex* b, std::size_t m) {
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t i = 0; i < m; ++i) {
            const Complex x = b[i + j * m];
            const Complex y = std::conj(b[j + i * m]);
            if (y.real() != x.real()) return y.real() < x.real();
            if (y.imag() != x.imag()) return y.imag() < x.imag();
        }
    return false;
}
} // namespace detail

// Spectral norm (largest singular value) of an m x m block, via a full SVD.
// The SVD runs on the lexicographically smaller of B and B^H so that
// ||B|| == ||B^H|| holds bitwise.
inline double block_norm(const Complex* data, std::size_t m) {
    if (m == 1) return std::abs(data[0]);
    const auto mi = static_cast<Eigen::Index>(m);
    const bool flip = detail::adjoint_precedes(data, m);
    if (m == 2) {
        Eigen::Matrix2cd b = Eigen::Map<const Eigen::Matrix2cd>(data);
        if (flip) b.adjointInPlace();
        return Eigen::JacobiSVD<Eigen::Matrix2cd>(b).singularValues()(0);
    }
    Eigen::MatrixXcd b = ConstBlockMap(data, mi, mi);
    if (flip) b.adjointInPlace();
    return Eigen::JacobiSVD<Eigen::MatrixXcd>(b).singularValues()(0);
}

inline double block_norm(const Block& b) {
    if (b.rows() != b.cols()) throw UsageError("block_norm: block must be square");
    if (b.size() == 0) return 0.0;
    return block_norm(b.data(), static_cast<std::size_t>(b.rows()));
}

namespace detail {
// C += A * B for column-major m x m blocks.
inline void block_gemm_acc(Complex* c, const Complex* a, const Complex* b, std::size_t m) {
    if (m == 1) {
        c[0] += a[0] * b[0];
        return;
    }
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t p = 0; p < m; ++p) {
            const Complex bpj = b[p + j * m];
            const Complex* acol = a + p * m;
            Complex* ccol = c + j * m;
            for (std::size_t i = 0; i < m; ++i) ccol[i] += acol[i] * bpj;
        }
}
} // namespace detail

// Element of l^2(X; C^m), stored densely (component k occupies [k*m, (k+1)*m)).
class BlockVector {
public:
    BlockVector(std::shared_ptr<const PointSet> X, std::size_t m)
        : X_(std::move(X)), m_(m), data_(Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(X_->size() * m))) {}
    BlockVector(std::shared_ptr<const PointSet> X, std::size_t m, Eigen::VectorXcd data)
        : X_(std::move(X)), m_(m), data_(std::move(data)) {
        if (static_cast<std::size_t>(data_.size()) != X_->size() * m_) throw UsageError("BlockVector: size mismatch");
    }

    const PointSet& index_set() const { return *X_; }
    const std::shared_ptr<const PointSet>& index_set_ptr() const { return X_; }
    std::size_t block_dim() const { return m_; }
    auto component(std::size_t k) { return data_.segment(static_cast<Eigen::Index>(k * m_), static_cast<Eigen::Index>(m_)); }
    auto component(std::size_t k) const {
        return data_.segment(static_cast<Eigen::Index>(k * m_), static_cast<Eigen::Index>(m_));
    }
    const Eigen::VectorXcd& data() const { return data_; }
    Eigen::VectorXcd& data() { return data_; }

private:
    std::shared_ptr<const PointSet> X_;
    std::size_t m_;
    Eigen::VectorXcd data_;
};

class BlockMatrix {
public:
    struct Row {
        std::vector<std::size_t> cols; // strictly increasing
        std::vector<Complex> vals;     // cols.size() * m * m, column-major blocks
    };

    BlockMatrix(std::shared_ptr<const PointSet> X, std::size_t m) : X_(std::move(X)), m_(m) {
        if (!X_) throw UsageError("BlockMatrix: null index set");
        if (m_ == 0) throw UsageError("BlockMatrix: block dimension must be >= 1");
        rows_.resize(X_->size());
    }

    static BlockMatrix identity(std::shared_ptr<const PointSet> X, std::size_t m) {
        BlockMatrix I(std::move(X), m);
        const Block e = Block::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
        for (std::size_t k = 0; k < I.size(); ++k) I.set(k, k, e);
        return I;
    }

    const PointSet& index_set() const { return *X_; }
    const std::shared_ptr<const PointSet>& index_set_ptr() const { return X_; }
    std::size_t block_dim() const { return m_; }
    std::size_t size() const { return rows_.size(); }
    std::size_t block_stride() const { return m_ * m_; }
    const Row& row(std::size_t k) const { return rows_[k]; }

    std::size_t stored_blocks() const {
        std::size_t n = 0;
        for (const auto& r : rows_) n += r.cols.size();
        return n;
    }

    // Pointer to the stored block (k,l), or nullptr when absent.
    const Complex* find(std::size_t k, std::size_t l) const {
        const Row& r = rows_.at(k);
        auto it = std::lower_bound(r.cols.begin(), r.cols.end(), l);
        if (it == r.cols.end() || *it != l) return nullptr;
        return r.vals.data() + static_cast<std::size_t>(it - r.cols.begin()) * block_stride();
    }

    std::optional<Block> block(std::size_t k, std::size_t l) const {
        const Complex* p = find(k, l);
        if (!p) return std::nullopt;
        return Block(ConstBlockMap(p, mi(), mi()));
    }

    Block block_or_zero(std::size_t k, std::size_t l) const {
        const Complex* p = find(k, l);
        if (!p) return Block::Zero(mi(), mi());
        return Block(ConstBlockMap(p, mi(), mi()));
    }

    void set(std::size_t k, std::size_t l, const Block& b) {
        if (b.rows() != mi() || b.cols() != mi()) throw UsageError("BlockMatrix::set: block has wrong dimensions");
        set(k, l, std::span<const Complex>(b.data(), block_stride()));
    }

    void set(std::size_t k, std::size_t l, std::span<const Complex> b) {
        if (k >= size() || l >= size()) throw UsageError("BlockMatrix::set: index out of range");
        if (b.size() != block_stride()) throw UsageError("BlockMatrix::set: block has wrong dimensions");
        Row& r = rows_[k];
        auto it = std::lower_bound(r.cols.begin(), r.cols.end(), l);
        const auto pos = static_cast<std::size_t>(it - r.cols.begin());
        if (it != r.cols.end() && *it == l) {
            std::copy(b.begin(), b.end(), r.vals.begin() + static_cast<std::ptrdiff_t>(pos * block_stride()));
            return;
        }
        r.cols.insert(it, l);
        r.vals.insert(r.vals.begin() + static_cast<std::ptrdiff_t>(pos * block_stride()), b.begin(), b.end());
    }

    void erase(std::size_t k, std::size_t l) {
        Row& r = rows_.at(k);
        auto it = std::lower_bound(r.cols.begin(), r.cols.end(), l);
        if (it == r.cols.end() || *it != l) return;
        const auto pos = static_cast<std::ptrdiff_t>(it - r.cols.begin());
        r.cols.erase(it);
        const auto stride = static_cast<std::ptrdiff_t>(block_stride());
        r.vals.erase(r.vals.begin() + pos * stride, r.vals.begin() + (pos + 1) * stride);
    }

    // Visits stored entries in (row, column) order: f(k, l, const Complex* block).
    template <typename F>
    void for_each(F&& f) const {
        for (std::size_t k = 0; k < size(); ++k) {
            const Row& r = rows_[k];
            for (std::size_t i = 0; i < r.cols.size(); ++i) f(k, r.cols[i], r.vals.data() + i * block_stride());
        }
    }

    // Entrywise transform f(k, l, Complex* block) in place.
    template <typename F>
    void transform(F&& f) {
        for (std::size_t k = 0; k < size(); ++k) {
            Row& r = rows_[k];
            for (std::size_t i = 0; i < r.cols.size(); ++i) f(k, r.cols[i], r.vals.data() + i * block_stride());
        }
    }

    // Drops stored blocks that are exactly zero.
    void prune_zeros() {
        for (auto& r : rows_) {
            Row out;
            for (std::size_t i = 0; i < r.cols.size(); ++i) {
                const Complex* b = r.vals.data() + i * block_stride();
                if (std::any_of(b, b + block_stride(), [](const Complex& z) { return z != Complex(0.0); })) {
                    out.cols.push_back(r.cols[i]);
                    out.vals.insert(out.vals.end(), b, b + block_stride());
                }
            }
            r = std::move(out);
        }
    }

    Eigen::MatrixXcd dense() const {
        const auto N = static_cast<Eigen::Index>(size() * m_);
        Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(N, N);
        for_each([&](std::size_t k, std::size_t l, const Complex* b) {
            D.block(static_cast<Eigen::Index>(k * m_), static_cast<Eigen::Index>(l * m_), mi(), mi()) =
                ConstBlockMap(b, mi(), mi());
        });
        return D;
    }

    // Re-blocks a dense (n m) x (n m) matrix; blocks that are exactly zero are not stored.
    static BlockMatrix from_dense(std::shared_ptr<const PointSet> X, std::size_t m, const Eigen::MatrixXcd& D) {
        BlockMatrix A(std::move(X), m);
        const auto N = static_cast<Eigen::Index>(A.size() * m);
        if (D.rows() != N || D.cols() != N) throw UsageError("from_dense: dimension mismatch");
        for (std::size_t k = 0; k < A.size(); ++k)
            for (std::size_t l = 0; l < A.size(); ++l) {
                Block b = D.block(static_cast<Eigen::Index>(k * m), static_cast<Eigen::Index>(l * m), A.mi(), A.mi());
                if (b.cwiseAbs().maxCoeff() != 0.0) A.set(k, l, b);
            }
        return A;
    }

    BlockMatrix scaled(Complex c) const {
        BlockMatrix B = *this;
        for (auto& r : B.rows_)
            for (auto& z : r.vals) z *= c;
        return B;
    }

    BlockMatrix scaled(double c) const {
        BlockMatrix B = *this;
        for (auto& r : B.rows_)
            for (auto& z : r.vals) z *= c;
        return B;
    }

    friend bool same_shape(const BlockMatrix& a, const BlockMatrix& b) {
        return a.m_ == b.m_ && (a.X_ == b.X_ || *a.X_ == *b.X_);
    }

    // alpha * A + beta * B over the union of supports.
    friend BlockMatrix linear_combination(Complex alpha, const BlockMatrix& A, Complex beta, const BlockMatrix& B) {
        if (!same_shape(A, B)) throw UsageError("linear_combination: index set or block dimension mismatch");
        BlockMatrix C(A.X_, A.m_);
        const std::size_t st = A.block_stride();
        for (std::size_t k = 0; k < A.size(); ++k) {
            const Row& ra = A.rows_[k];
            const Row& rb = B.rows_[k];
            Row& rc = C.rows_[k];
            std::size_t i = 0, j = 0;
            while (i < ra.cols.size() || j < rb.cols.size()) {
                const bool take_a = j == rb.cols.size() || (i < ra.cols.size() && ra.cols[i] <= rb.cols[j]);
                const bool take_b = i == ra.cols.size() || (j < rb.cols.size() && rb.cols[j] <= ra.cols[i]);
                const std::size_t col = take_a ? ra.cols[i] : rb.cols[j];
                rc.cols.push_back(col);
                for (std::size_t e = 0; e < st; ++e) {
                    Complex v(0.0);
                    if (take_a) v += alpha * ra.vals[i * st + e];
                    if (take_b) v += beta * rb.vals[j * st + e];
                    rc.vals.push_back(v);
                }
                if (take_a) ++i;
                if (take_b) ++j;
            }
        }
        return C;
    }

    friend BlockMatrix operator+(const BlockMatrix& A, const BlockMatrix& B) { return linear_combination(1.0, A, 1.0, B); }
    friend BlockMatrix operator-(const BlockMatrix& A, const BlockMatrix& B) { return linear_combination(1.0, A, -1.0, B); }

    // Entrywise equality, absent == zero.
    friend bool operator==(const BlockMatrix& A, const BlockMatrix& B) {
        if (!same_shape(A, B)) return false;
        const BlockMatrix D = A - B;
        bool equal = true;
        D.for_each([&](std::size_t, std::size_t, const Complex* b) {
            for (std::size_t e = 0; e < D.block_stride(); ++e)
                if (b[e] != Complex(0.0)) equal = false;
        });
        return equal;
    }

private:
    Eigen::Index mi() const { return static_cast<Eigen::Index>(m_); }

    std::shared_ptr<const PointSet> X_;
    std::size_t m_;
    std::vector<Row> rows_;

    friend BlockMatrix matmul(const BlockMatrix&, const BlockMatrix&);
    friend BlockMatrix adjoint(const BlockMatrix&);
};

inline void require_same_shape(const BlockMatrix& A, const BlockMatrix& B, const char* who) {
    if (!same_shape(A, B)) throw UsageError(std::string(who) + ": index set or block dimension mismatch");
}

// (A f)_k = sum_l A_{k,l} f_l.
inline BlockVector apply(const BlockMatrix& A, const BlockVector& f) {
    if (A.block_dim() != f.block_dim() || !(A.index_set() == f.index_set()))
        throw UsageError("apply: index set or block dimension mismatch");
    const std::size_t m = A.block_dim();
    const auto mi = static_cast<Eigen::Index>(m);
    BlockVector g(A.index_set_ptr(), m);
    parallel_for(A.size(), [&](std::size_t k) {
        const auto& r = A.row(k);
        Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(mi);
        for (std::size_t i = 0; i < r.cols.size(); ++i)
            acc.noalias() += ConstBlockMap(r.vals.data() + i * m * m, mi, mi) * f.component(r.cols[i]);
        g.component(k) = acc;
    });
    return g;
}

// (A* f)_l = sum_k A_{k,l}^* f_k, without forming A*.
inline BlockVector apply_adjoint(const BlockMatrix& A, const BlockVector& f) {
    if (A.block_dim() != f.block_dim() || !(A.index_set() == f.index_set()))
        throw UsageError("apply_adjoint: index set or block dimension mismatch");
    const std::size_t m = A.block_dim();
    const auto mi = static_cast<Eigen::Index>(m);
    BlockVector g(A.index_set_ptr(), m);
    A.for_each([&](std::size_t k, std::size_t l, const Complex* b) {
        g.component(l).noalias() += ConstBlockMap(b, mi, mi).adjoint() * f.component(k);
    });
    return g;
}

namespace detail {
// Block-level multiply-adds of the sparse product, sum over stored (k,n) of |row n of B|.
inline double product_work(const BlockMatrix& A, const BlockMatrix& B) {
    double w = 0.0;
    for (std::size_t k = 0; k < A.size(); ++k)
        for (std::size_t n : A.row(k).cols) w += static_cast<double>(B.row(n).cols.size());
    return w;
}
} // namespace detail

// [AB]_{k,l} = sum_n A_{k,n} B_{n,l}. A block is stored iff some n has both
// A_{k,n} and B_{n,l} stored. Well-filled products go through a dense GEMM;
// the rest accumulate row by row over n in increasing order.
inline BlockMatrix matmul(const BlockMatrix& A, const BlockMatrix& B) {
    require_same_shape(A, B, "matmul");
    const std::size_t n = A.size();
    const std::size_t st = A.block_stride();
    const std::size_t m = A.block_dim();
    BlockMatrix C(A.index_set_ptr(), m);
    const double nd = static_cast<double>(n);
    if (n >= 16 && detail::product_work(A, B) >= nd * nd * nd / 8) {
        const std::size_t words = (n + 63) / 64;
        std::vector<std::uint64_t> bmask(n * words, 0);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t l : B.rows_[r].cols) bmask[r * words + l / 64] |= std::uint64_t{1} << (l % 64);
        const Eigen::MatrixXcd D = A.dense() * B.dense();
        const auto mi = static_cast<Eigen::Index>(m);
        parallel_for(n, [&](std::size_t k) {
            std::vector<std::uint64_t> mask(words, 0);
            for (std::size_t c : A.rows_[k].cols)
                for (std::size_t w = 0; w < words; ++w) mask[w] |= bmask[c * words + w];
            auto& rc = C.rows_[k];
            for (std::size_t l = 0; l < n; ++l)
                if (mask[l / 64] >> (l % 64) & 1U) rc.cols.push_back(l);
            rc.vals.resize(rc.cols.size() * st);
            for (std::size_t i = 0; i < rc.cols.size(); ++i)
                Eigen::Map<Eigen::MatrixXcd>(rc.vals.data() + i * st, mi, mi) =
                    D.block(static_cast<Eigen::Index>(k * m), static_cast<Eigen::Index>(rc.cols[i] * m), mi, mi);
        });
        return C;
    }
    parallel_for(n, [&](std::size_t k) {
        thread_local std::vector<Complex> acc;
        thread_local std::vector<unsigned char> mark;
        acc.assign(n * st, Complex(0.0));
        mark.assign(n, 0);
        std::vector<std::size_t> touched;
        const auto& ra = A.rows_[k];
        for (std::size_t i = 0; i < ra.cols.size(); ++i) {
            const Complex* a = ra.vals.data() + i * st;
            const auto& rb = B.rows_[ra.cols[i]];
            for (std::size_t j = 0; j < rb.cols.size(); ++j) {
                const std::size_t l = rb.cols[j];
                if (!mark[l]) {
                    mark[l] = 1;
                    touched.push_back(l);
                }
                detail::block_gemm_acc(acc.data() + l * st, a, rb.vals.data() + j * st, m);
            }
        }
        std::sort(touched.begin(), touched.end());
        auto& rc = C.rows_[k];
        rc.cols = touched;
        rc.vals.resize(touched.size() * st);
        for (std::size_t i = 0; i < touched.size(); ++i)
            std::copy_n(acc.data() + touched[i] * st, st, rc.vals.data() + i * st);
    });
    return C;
}

inline BlockMatrix operator*(const BlockMatrix& A, const BlockMatrix& B) { return matmul(A, B); }

// Entry (k,l) of A* is the conjugate transpose of A_{l,k}.
inline BlockMatrix adjoint(const BlockMatrix& A) {
    const std::size_t m = A.block_dim();
    const std::size_t st = A.block_stride();
    BlockMatrix C(A.index_set_ptr(), m);
    A.for_each([&](std::size_t k, std::size_t l, const Complex* b) {
        auto& r = C.rows_[l];
        r.cols.push_back(k);
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t i = 0; i < m; ++i) r.vals.push_back(std::conj(b[j + i * m]));
    });
    (void)st;
    return C;
}

// delta_j(A) = [M_j, A]: entry (k,l) scaled by (k_j - l_j).
inline BlockMatrix derivation(const BlockMatrix& A, std::size_t axis) {
    const PointSet& X = A.index_set();
    if (axis >= X.dim()) throw UsageError("derivation: axis out of range");
    BlockMatrix D = A;
    const std::size_t st = A.block_stride();
    D.transform([&](std::size_t k, std::size_t l, Complex* b) {
        const double f = X.coord(k, axis) - X.coord(l, axis);
        for (std::size_t e = 0; e < st; ++e) b[e] *= f;
    });
    return D;
}

using MultiIndex = std::vector<unsigned>;

// delta^alpha(A): entry (k,l) scaled by prod_j (k_j - l_j)^{alpha_j}. The
// scalar factor is formed first (axes in order), then applied once.
inline BlockMatrix derivation_multi(const BlockMatrix& A, const MultiIndex& alpha) {
    const PointSet& X = A.index_set();
    if (alpha.size() != X.dim()) throw UsageError("derivation_multi: multi-index rank must equal dim");
    if (std::all_of(alpha.begin(), alpha.end(), [](unsigned a) { return a == 0; })) return A;
    BlockMatrix D = A;
    const std::size_t st = A.block_stride();
    D.transform([&](std::size_t k, std::size_t l, Complex* b) {
        double f = 1.0;
        for (std::size_t j = 0; j < alpha.size(); ++j) {
            const double dj = X.coord(k, j) - X.coord(l, j);
            for (unsigned p = 0; p < alpha[j]; ++p) f *= dj;
        }
        for (std::size_t e = 0; e < st; ++e) b[e] *= f;
    });
    return D;
}

// Coordinate multiplication operator M_j = diag(k_j I).
inline BlockMatrix coordinate_operator(std::shared_ptr<const PointSet> X, std::size_t m, std::size_t axis) {
    if (axis >= X->dim()) throw UsageError("coordinate_operator: axis out of range");
    BlockMatrix M(X, m);
    const auto mi = static_cast<Eigen::Index>(m);
    for (std::size_t k = 0; k < M.size(); ++k) M.set(k, k, Block(Block::Identity(mi, mi) * X->coord(k, axis)));
    return M;
}

// max over the union of supports of ||A_{k,l} - B_{k,l}||.
inline double max_block_diff(const BlockMatrix& A, const BlockMatrix& B) {
    const BlockMatrix D = A - B;
    double best = 0.0;
    D.for_each([&](std::size_t, std::size_t, const Complex* b) { best = std::max(best, block_norm(b, D.block_dim())); });
    return best;
}

inline double max_block_norm(const BlockMatrix& A) {
    double best = 0.0;
    A.for_each([&](std::size_t, std::size_t, const Complex* b) { best = std::max(best, block_norm(b, A.block_dim())); });
    return best;
}

inline double max_abs_entry(const BlockMatrix& A) {
    double best = 0.0;
    A.for_each([&](std::size_t, std::size_t, const Complex* b) {
        for (std::size_t e = 0; e < A.block_stride(); ++e) best = std::max(best, std::abs(b[e]));
    });
    return best;
}

inline bool is_self_adjoint(const BlockMatrix& A) { return A == adjoint(A); }

} // namespace opband
