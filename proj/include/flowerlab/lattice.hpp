#pragma once

// Integer lattice bookkeeping for the monomial chart: reduction M = d*m, a
// unimodular completion of the primitive vector m into a non-negative matrix
// Mmat with first row m, and its exact integer inverse Nmat. All arithmetic is
// exact (arbitrary-size integers internally); results that do not fit 64 bits
// raise LatticeOverflow instead of wrapping.

#include <complex>
#include <cstdint>
#include <vector>

#include "flowerlab/errors.hpp"
#include "flowerlab/point.hpp"

namespace flowerlab {

using IntMatrix = std::vector<std::vector<std::int64_t>>;

struct ReducedMultiIndex {
    std::int64_t d = 0;   // gcd of the nonzero entries of M
    MultiIndex m;         // M / d
    std::int32_t m_bar = 0;  // number of zero entries
};

// M = d * m with m primitive. Throws ZeroMultiIndex when M is identically zero.
ReducedMultiIndex reduce_multiindex(const MultiIndex& M);

struct LatticeData {
    std::int32_t n = 0;
    std::int64_t d = 1;      // gcd of the original M (1 when built from a primitive m)
    MultiIndex m;            // first row of Mmat
    std::int32_t m_bar = 0;  // number of zero entries of m
    IntMatrix Mmat;          // unimodular, non-negative entries, block diag(leading, identity)
    IntMatrix Nmat;          // exact inverse of Mmat
};

// Completes a primitive m (non-negative, zeros trailing, gcd of the nonzero
// part 1) to a unimodular non-negative matrix with first row m, by an
// extended-Euclid column sweep followed by clearing each later row to its
// minimal non-negative shift along m. Deterministic. Throws NotPrimitive,
// BadOrdering, ZeroMultiIndex, LatticeOverflow.
LatticeData complete_unimodular(const MultiIndex& m);

// lambda_I = d * <a, I>.
Complex lambda_of(const MultiIndex& I, const ComplexPoint& a, std::int64_t d);

// Every column 2..(n - m_bar) of Nmat (1-based) must contain a strictly
// negative entry; returns whether that holds.
bool check_negative_columns(const LatticeData& lat);

// Exact determinant, exposed for the exactness checks.
std::int64_t exact_det(const IntMatrix& A);

// Convenience: reduce M and complete its primitive part in one call, so the
// result carries the actual d of M rather than the default 1.
LatticeData lattice_for(const MultiIndex& M);

} // namespace flowerlab
