#include "flowerlab/lattice.hpp"

#include <boost/multiprecision/cpp_int.hpp>
#include <numeric>

namespace flowerlab {

namespace {

using bigint = boost::multiprecision::cpp_int;
using BigMatrix = std::vector<std::vector<bigint>>;

// gcd g = s*a + t*b with the usual recursive normalization.
void extgcd(const bigint& a, const bigint& b, bigint& g, bigint& s, bigint& t) {
    if (b == 0) {
        g = a;
        s = 1;
        t = 0;
        return;
    }
    bigint g1, s1, t1;
    extgcd(b, a % b, g1, s1, t1);
    g = g1;
    s = t1;
    t = s1 - (a / b) * t1;
}

bigint ceil_div(const bigint& num, const bigint& den) {
    // den > 0; cpp_int division truncates toward zero
    if (num > 0) return (num + den - 1) / den;
    return num / den;
}

std::int64_t narrow_checked(const bigint& v) {
    if (v > bigint(INT64_MAX) || v < bigint(INT64_MIN))
        throw LatticeOverflow("lattice entry exceeds 64-bit range");
    return std::int64_t(v);
}

BigMatrix to_big(const IntMatrix& A) {
    BigMatrix B(A.size());
    for (std::size_t i = 0; i < A.size(); ++i)
        B[i].assign(A[i].begin(), A[i].end());
    return B;
}

// Fraction-free (Bareiss) determinant; exact.
bigint bareiss_det(BigMatrix A) {
    const std::size_t n = A.size();
    bigint prev = 1;
    int sign = 1;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (A[k][k] == 0) {
            std::size_t p = k + 1;
            while (p < n && A[p][k] == 0) ++p;
            if (p == n) return 0;
            std::swap(A[k], A[p]);
            sign = -sign;
        }
        for (std::size_t i = k + 1; i < n; ++i)
            for (std::size_t j = k + 1; j < n; ++j)
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) / prev;
        prev = A[k][k];
    }
    return n == 0 ? bigint(1) : bigint(sign) * A[n - 1][n - 1];
}

// Exact inverse of a matrix with det = +-1, via adjugate columns solved by
// Gauss elimination over exact rationals kept as (num/den) pairs is overkill;
// with det a unit, Cramer columns from Bareiss determinants stay exact and
// small at these sizes.
BigMatrix unit_inverse(const BigMatrix& A, const bigint& det) {
    const std::size_t n = A.size();
    BigMatrix inv(n, std::vector<bigint>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            // cofactor C_ji for inv[i][j] = adj(A)[i][j] / det = C_ji / det
            BigMatrix minor;
            minor.reserve(n - 1);
            for (std::size_t r = 0; r < n; ++r) {
                if (r == j) continue;
                std::vector<bigint> row;
                row.reserve(n - 1);
                for (std::size_t c = 0; c < n; ++c) {
                    if (c == i) continue;
                    row.push_back(A[r][c]);
                }
                minor.push_back(std::move(row));
            }
            bigint cof = bareiss_det(std::move(minor));
            if ((i + j) % 2 == 1) cof = -cof;
            inv[i][j] = cof / det;  // det is +-1
        }
    }
    return inv;
}

} // namespace

ReducedMultiIndex reduce_multiindex(const MultiIndex& M) {
    std::int64_t d = 0;
    std::int32_t zeros = 0;
    for (auto e : M) {
        if (e < 0) throw PreconditionViolated("reduce_multiindex: negative entry");
        if (e == 0)
            ++zeros;
        else
            d = std::gcd(d, e);
    }
    if (d == 0) throw ZeroMultiIndex("reduce_multiindex: M is identically zero");
    ReducedMultiIndex r;
    r.d = d;
    r.m_bar = zeros;
    r.m.reserve(M.size());
    for (auto e : M) r.m.push_back(e / d);
    return r;
}

LatticeData complete_unimodular(const MultiIndex& m) {
    const std::size_t n = m.size();
    if (n == 0) throw ZeroMultiIndex("complete_unimodular: empty m");
    std::size_t k = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (m[i] < 0) throw PreconditionViolated("complete_unimodular: negative entry");
        if (m[i] == 0) {
            k = std::min(k, i);
        } else if (i > k) {
            throw BadOrdering("complete_unimodular: zero entries must be trailing");
        }
    }
    const std::size_t lead = k;  // count of nonzero leading entries
    if (lead == 0) throw ZeroMultiIndex("complete_unimodular: m is identically zero");

    std::int64_t g0 = 0;
    for (std::size_t i = 0; i < lead; ++i) g0 = std::gcd(g0, m[i]);
    if (g0 != 1) throw NotPrimitive("complete_unimodular: gcd of nonzero part is not 1");

    // Column sweep v -> (1, 0, ..., 0), accumulating B = U^{-1} by the inverse
    // row operations; the first row of B is m restricted to the leading block.
    std::vector<bigint> v(lead);
    for (std::size_t i = 0; i < lead; ++i) v[i] = m[i];
    BigMatrix B(lead, std::vector<bigint>(lead, 0));
    for (std::size_t i = 0; i < lead; ++i) B[i][i] = 1;
    for (std::size_t j = 1; j < lead; ++j) {
        bigint g, s, t;
        extgcd(v[0], v[j], g, s, t);
        bigint v0 = v[0], vj = v[j];
        for (std::size_t c = 0; c < lead; ++c) {
            bigint r0 = B[0][c], rj = B[j][c];
            B[0][c] = (v0 / g) * r0 + (vj / g) * rj;
            B[j][c] = -t * r0 + s * rj;
        }
        v[0] = g;
        v[j] = 0;
    }

    // Minimal non-negative shift of each later row along m.
    for (std::size_t i = 1; i < lead; ++i) {
        bigint c = 0;
        bool first = true;
        for (std::size_t j = 0; j < lead; ++j) {
            bigint need = ceil_div(-B[i][j], bigint(m[j]));
            if (first || need > c) c = need, first = false;
        }
        for (std::size_t j = 0; j < lead; ++j) B[i][j] += c * bigint(m[j]);
    }

    // Assemble block diag(B, I) and check everything exactly.
    BigMatrix Mb(n, std::vector<bigint>(n, 0));
    for (std::size_t i = 0; i < lead; ++i)
        for (std::size_t j = 0; j < lead; ++j) Mb[i][j] = B[i][j];
    for (std::size_t i = lead; i < n; ++i) Mb[i][i] = 1;

    for (std::size_t j = 0; j < n; ++j)
        if (Mb[0][j] != bigint(m[j]))
            throw Error("complete_unimodular: internal sweep lost the first row");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (Mb[i][j] < 0) throw Error("complete_unimodular: negative entry survived");

    bigint det = bareiss_det(Mb);
    if (det != 1 && det != -1)
        throw Error("complete_unimodular: determinant is not a unit");

    BigMatrix Nb = unit_inverse(Mb, det);

    // Exact sanity: N*M = M*N = I.
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            bigint s1 = 0, s2 = 0;
            for (std::size_t t = 0; t < n; ++t) {
                s1 += Nb[i][t] * Mb[t][j];
                s2 += Mb[i][t] * Nb[t][j];
            }
            bigint want = (i == j) ? 1 : 0;
            if (s1 != want || s2 != want)
                throw Error("complete_unimodular: inverse verification failed");
        }
    }

    LatticeData lat;
    lat.n = std::int32_t(n);
    lat.d = 1;
    lat.m = m;
    lat.m_bar = std::int32_t(n - lead);
    lat.Mmat.assign(n, std::vector<std::int64_t>(n));
    lat.Nmat.assign(n, std::vector<std::int64_t>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            lat.Mmat[i][j] = narrow_checked(Mb[i][j]);
            lat.Nmat[i][j] = narrow_checked(Nb[i][j]);
        }
    return lat;
}

Complex lambda_of(const MultiIndex& I, const ComplexPoint& a, std::int64_t d) {
    Complex s = 0.0;
    for (std::size_t i = 0; i < I.size(); ++i) s += a[i] * double(I[i]);
    return double(d) * s;
}

bool check_negative_columns(const LatticeData& lat) {
    std::size_t lead = 0;
    for (std::size_t i = 0; i < lat.m.size(); ++i)
        if (lat.m[i] != 0) lead = i + 1;
    for (std::size_t col = 1; col < lead; ++col) {
        bool has_negative = false;
        for (std::size_t row = 0; row < lat.Nmat.size(); ++row)
            if (lat.Nmat[row][col] < 0) has_negative = true;
        if (!has_negative) return false;
    }
    return true;
}

std::int64_t exact_det(const IntMatrix& A) {
    return narrow_checked(bareiss_det(to_big(A)));
}

LatticeData lattice_for(const MultiIndex& M) {
    ReducedMultiIndex red = reduce_multiindex(M);
    LatticeData lat = complete_unimodular(red.m);
    lat.d = red.d;
    return lat;
}

} // namespace flowerlab
