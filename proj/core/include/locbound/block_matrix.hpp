#pragma once

#include "locbound/info_matrix.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace locbound {

/// Thrown by strict Schur reductions when the eliminated principal submatrix is
/// singular. `block()` is the eliminated block index with the largest share of
/// the null direction.
class SingularComplementError : public std::runtime_error {
public:
    SingularComplementError(std::size_t block, const std::string& what)
        : std::runtime_error(what), block_(block) {}
    std::size_t block() const { return block_; }

private:
    std::size_t block_;
};

enum class ReductionPolicy {
    strict,          ///< singular complement -> SingularComplementError
    pseudo_inverse,  ///< generalized Schur complement via Moore-Penrose inverse
};

/// Dense symmetric matrix addressed by (block_dim x block_dim) blocks.
class BlockMatrix {
public:
    BlockMatrix() = default;
    explicit BlockMatrix(std::size_t n_blocks, std::size_t block_dim = 2);

    /// Wraps a dense matrix; throws std::invalid_argument when it is not square
    /// with a size divisible by block_dim. Symmetrized on entry.
    static BlockMatrix from_dense(const Eigen::MatrixXd& m, std::size_t block_dim = 2);

    std::size_t n_blocks() const { return n_blocks_; }
    std::size_t block_dim() const { return block_dim_; }
    std::size_t size() const { return n_blocks_ * block_dim_; }

    const Eigen::MatrixXd& dense() const { return data_; }

    Eigen::MatrixXd block(std::size_t k, std::size_t m) const;
    /// Writes block (k, m) and its transpose at (m, k).
    void set_block(std::size_t k, std::size_t m, const Eigen::MatrixXd& value);
    void add_to_block(std::size_t k, std::size_t m, const Eigen::MatrixXd& value);

    /// 2x2 view of a diagonal block (block_dim must be 2).
    InfoMatrix2 info_block(std::size_t k) const;

    BlockMatrix& operator+=(const BlockMatrix& o);
    friend BlockMatrix operator+(BlockMatrix a, const BlockMatrix& b) { return a += b; }

    /// Drops block row/column k.
    BlockMatrix without_block(std::size_t k) const;
    /// Appends a zero block row/column.
    BlockMatrix grown(std::size_t extra_blocks) const;

    double max_abs_diff(const BlockMatrix& o) const;

private:
    std::size_t n_blocks_ = 0;
    std::size_t block_dim_ = 2;
    Eigen::MatrixXd data_;
};

/// EFIM of the kept blocks: A - B C^-1 B^T where C is the principal submatrix of
/// the discarded blocks. `keep` must hold distinct, valid block indices; the
/// result lists them in the given order.
BlockMatrix schur_reduce(const BlockMatrix& m, const std::vector<std::size_t>& keep,
                         ReductionPolicy policy = ReductionPolicy::strict);

/// Dense Schur complement onto the leading `n_keep` coordinates.
Eigen::MatrixXd schur_complement(const Eigen::MatrixXd& m, Eigen::Index n_keep,
                                 ReductionPolicy policy = ReductionPolicy::strict,
                                 std::size_t block_dim = 1);

}  // namespace locbound
