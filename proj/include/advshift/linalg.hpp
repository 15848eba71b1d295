#pragma once

// Dense vectors standing in for finitely truncated l2 elements, plus the few
// subspace operations the dynamics need. Everything is double precision.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace advshift {

using Vec = std::vector<double>;
using ConstVecView = std::span<const double>;
using VecView = std::span<double>;

double inner(ConstVecView u, ConstVecView v);
double norm(ConstVecView v);
bool all_finite(ConstVecView v);

/// y += alpha * x
void axpy(double alpha, ConstVecView x, VecView y);
Vec add(ConstVecView u, ConstVecView v);
Vec subtract(ConstVecView u, ConstVecView v);
Vec scaled(double alpha, ConstVecView v);

/// v / |v|; throws DegenerateError for a zero vector.
Vec normalize(ConstVecView v);

/// Orthonormal basis of a linear subspace of R^ambient_dim.
class Subspace {
public:
    /// Takes ownership of an already-orthonormal basis. Orthonormality is
    /// checked to 1e-10 and a DimensionError is thrown otherwise.
    Subspace(std::vector<Vec> basis, std::size_t ambient_dim);

    std::size_t ambient_dim() const noexcept { return ambient_dim_; }
    std::size_t rank() const noexcept { return basis_.size(); }
    const std::vector<Vec>& basis() const noexcept { return basis_; }
    const Vec& operator[](std::size_t k) const { return basis_[k]; }

    /// max |<b_i, b_j> - delta_ij|
    double gram_deviation() const;

    /// Subspace coordinates (<v, b_k>)_k.
    Vec coordinates(ConstVecView v) const;
    /// sum_k coords[k] * b_k
    Vec embed(ConstVecView coords) const;

private:
    std::vector<Vec> basis_;
    std::size_t ambient_dim_;
};

/// Pi_s v = sum_k <v, b_k> b_k
Vec project(ConstVecView v, const Subspace& s);

/// Thin QR of the column set by modified Gram-Schmidt with one full
/// re-orthogonalization pass. `r` is upper triangular, column-major by k:
/// columns[j] = sum_{i<=j} r[i][j] q[i].
struct ThinQR {
    std::vector<Vec> q;
    std::vector<Vec> r;
};
ThinQR thin_qr(std::vector<Vec> columns);

/// Uniformly random rank-dimensional subspace: orthogonalized i.i.d. N(0,1)
/// columns drawn from the (seed, Subspace) stream.
Subspace haar_subspace(std::size_t ambient_dim, std::size_t rank, std::uint64_t seed);

/// Solves A x = b for symmetric positive definite A (row-major rows).
Vec cholesky_solve(std::vector<Vec> a, Vec b);

}  // namespace advshift
