#include "locbound/block_matrix.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <set>

namespace locbound {

namespace {

// Relative pivot threshold on the Jacobi-scaled complement (unit diagonal).
constexpr double kPivotTol = 1e-12;

std::size_t dominant_block(const Eigen::VectorXd& v, std::size_t block_dim)
{
    std::size_t best = 0;
    double best_norm = -1.0;
    const auto n_blocks = static_cast<std::size_t>(v.size()) / block_dim;
    for (std::size_t b = 0; b < n_blocks; ++b) {
        const double nrm = v.segment(static_cast<Eigen::Index>(b * block_dim),
                                     static_cast<Eigen::Index>(block_dim))
                               .squaredNorm();
        if (nrm > best_norm) {
            best_norm = nrm;
            best = b;
        }
    }
    return best;
}

}  // namespace

BlockMatrix::BlockMatrix(std::size_t n_blocks, std::size_t block_dim)
    : n_blocks_(n_blocks),
      block_dim_(block_dim),
      data_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_blocks * block_dim),
                                  static_cast<Eigen::Index>(n_blocks * block_dim)))
{
    if (block_dim == 0) {
        throw std::invalid_argument("block dimension must be positive");
    }
}

BlockMatrix BlockMatrix::from_dense(const Eigen::MatrixXd& m, std::size_t block_dim)
{
    if (block_dim == 0 || m.rows() != m.cols() || static_cast<std::size_t>(m.rows()) % block_dim != 0) {
        throw std::invalid_argument("matrix is not square with whole blocks");
    }
    BlockMatrix out(static_cast<std::size_t>(m.rows()) / block_dim, block_dim);
    out.data_ = 0.5 * (m + m.transpose());
    return out;
}

Eigen::MatrixXd BlockMatrix::block(std::size_t k, std::size_t m) const
{
    if (k >= n_blocks_ || m >= n_blocks_) {
        throw std::out_of_range("block index out of range");
    }
    const auto d = static_cast<Eigen::Index>(block_dim_);
    return data_.block(static_cast<Eigen::Index>(k) * d, static_cast<Eigen::Index>(m) * d, d, d);
}

void BlockMatrix::set_block(std::size_t k, std::size_t m, const Eigen::MatrixXd& value)
{
    const auto d = static_cast<Eigen::Index>(block_dim_);
    if (k >= n_blocks_ || m >= n_blocks_) {
        throw std::out_of_range("block index out of range");
    }
    if (value.rows() != d || value.cols() != d) {
        throw std::invalid_argument("block has the wrong shape");
    }
    const auto r = static_cast<Eigen::Index>(k) * d;
    const auto c = static_cast<Eigen::Index>(m) * d;
    if (k == m) {
        data_.block(r, c, d, d) = 0.5 * (value + value.transpose());
    } else {
        data_.block(r, c, d, d) = value;
        data_.block(c, r, d, d) = value.transpose();
    }
}

void BlockMatrix::add_to_block(std::size_t k, std::size_t m, const Eigen::MatrixXd& value)
{
    set_block(k, m, block(k, m) + value);
}

InfoMatrix2 BlockMatrix::info_block(std::size_t k) const
{
    if (block_dim_ != 2) {
        throw std::logic_error("info_block requires 2x2 blocks");
    }
    return InfoMatrix2::from_matrix(block(k, k));
}

BlockMatrix& BlockMatrix::operator+=(const BlockMatrix& o)
{
    if (o.n_blocks_ != n_blocks_ || o.block_dim_ != block_dim_) {
        throw std::invalid_argument("block matrices have different shapes");
    }
    data_ += o.data_;
    return *this;
}

BlockMatrix BlockMatrix::without_block(std::size_t k) const
{
    if (k >= n_blocks_) {
        throw std::out_of_range("block index out of range");
    }
    const auto d = static_cast<Eigen::Index>(block_dim_);
    const auto n = static_cast<Eigen::Index>(size());
    const auto cut = static_cast<Eigen::Index>(k) * d;
    const Eigen::Index tail = n - cut - d;

    BlockMatrix out(n_blocks_ - 1, block_dim_);
    auto& o = out.data_;
    o.topLeftCorner(cut, cut) = data_.topLeftCorner(cut, cut);
    o.topRightCorner(cut, tail) = data_.topRightCorner(cut, tail);
    o.bottomLeftCorner(tail, cut) = data_.bottomLeftCorner(tail, cut);
    o.bottomRightCorner(tail, tail) = data_.bottomRightCorner(tail, tail);
    return out;
}

BlockMatrix BlockMatrix::grown(std::size_t extra_blocks) const
{
    BlockMatrix out(n_blocks_ + extra_blocks, block_dim_);
    out.data_.topLeftCorner(data_.rows(), data_.cols()) = data_;
    return out;
}

double BlockMatrix::max_abs_diff(const BlockMatrix& o) const
{
    if (o.n_blocks_ != n_blocks_ || o.block_dim_ != block_dim_) {
        throw std::invalid_argument("block matrices have different shapes");
    }
    if (data_.size() == 0) {
        return 0.0;
    }
    return (data_ - o.data_).cwiseAbs().maxCoeff();
}

Eigen::MatrixXd schur_complement(const Eigen::MatrixXd& m, Eigen::Index n_keep, ReductionPolicy policy,
                                 std::size_t block_dim)
{
    if (m.rows() != m.cols() || n_keep < 0 || n_keep > m.rows()) {
        throw std::invalid_argument("schur_complement: bad dimensions");
    }
    const Eigen::Index n_drop = m.rows() - n_keep;
    const Eigen::MatrixXd a = m.topLeftCorner(n_keep, n_keep);
    if (n_drop == 0) {
        return a;
    }
    const Eigen::MatrixXd b = m.topRightCorner(n_keep, n_drop);
    const Eigen::MatrixXd c = m.bottomRightCorner(n_drop, n_drop);

    // Jacobi scaling so that pivot thresholds are scale-free.
    Eigen::VectorXd scale(n_drop);
    bool zero_diag = false;
    Eigen::Index zero_at = 0;
    for (Eigen::Index i = 0; i < n_drop; ++i) {
        const double d = c(i, i);
        if (!(d > 0.0)) {
            if (!zero_diag) {
                zero_at = i;
            }
            zero_diag = true;
            scale(i) = 1.0;
        } else {
            scale(i) = 1.0 / std::sqrt(d);
        }
    }
    const Eigen::MatrixXd cs = scale.asDiagonal() * c * scale.asDiagonal();
    const Eigen::MatrixXd bs = b * scale.asDiagonal();

    if (policy == ReductionPolicy::strict) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(cs);
        bool singular = zero_diag || ldlt.info() != Eigen::Success;
        if (!singular) {
            const Eigen::VectorXd piv = ldlt.vectorD();
            singular = piv.minCoeff() <= kPivotTol * std::max(1.0, piv.cwiseAbs().maxCoeff());
        }
        if (singular) {
            std::size_t bad = static_cast<std::size_t>(zero_at) / block_dim;
            if (!zero_diag) {
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cs);
                bad = dominant_block(es.eigenvectors().col(0), block_dim);
            }
            throw SingularComplementError(bad, "eliminated block " + std::to_string(bad) +
                                                   " has a singular information complement");
        }
        const Eigen::MatrixXd x = ldlt.solve(bs.transpose());
        Eigen::MatrixXd out = a - bs * x;
        return 0.5 * (out + out.transpose());
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cs);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double cutoff = kPivotTol * std::max(1.0, ev.cwiseAbs().maxCoeff());
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(n_drop);
    for (Eigen::Index i = 0; i < n_drop; ++i) {
        if (ev(i) > cutoff) {
            inv(i) = 1.0 / ev(i);
        }
    }
    const Eigen::MatrixXd proj = bs * es.eigenvectors();
    Eigen::MatrixXd out = a - proj * inv.asDiagonal() * proj.transpose();
    return 0.5 * (out + out.transpose());
}

BlockMatrix schur_reduce(const BlockMatrix& m, const std::vector<std::size_t>& keep, ReductionPolicy policy)
{
    const std::size_t nb = m.n_blocks();
    const std::set<std::size_t> kept(keep.begin(), keep.end());
    if (kept.size() != keep.size()) {
        throw std::invalid_argument("schur_reduce: duplicate block index");
    }
    if (!kept.empty() && *kept.rbegin() >= nb) {
        throw std::out_of_range("schur_reduce: block index out of range");
    }

    std::vector<std::size_t> order(keep);
    std::vector<std::size_t> dropped;
    for (std::size_t b = 0; b < nb; ++b) {
        if (!kept.contains(b)) {
            order.push_back(b);
            dropped.push_back(b);
        }
    }

    const auto d = static_cast<Eigen::Index>(m.block_dim());
    const auto n = static_cast<Eigen::Index>(m.size());
    Eigen::MatrixXd permuted(n, n);
    for (std::size_t i = 0; i < nb; ++i) {
        for (std::size_t j = 0; j < nb; ++j) {
            permuted.block(static_cast<Eigen::Index>(i) * d, static_cast<Eigen::Index>(j) * d, d, d) =
                m.block(order[i], order[j]);
        }
    }

    try {
        const Eigen::MatrixXd reduced =
            schur_complement(permuted, static_cast<Eigen::Index>(keep.size()) * d, policy, m.block_dim());
        return BlockMatrix::from_dense(reduced, m.block_dim());
    } catch (const SingularComplementError& e) {
        const std::size_t original = dropped.at(e.block());
        throw SingularComplementError(original, "eliminated block " + std::to_string(original) +
                                                    " has a singular information complement");
    }
}

}  // namespace locbound
