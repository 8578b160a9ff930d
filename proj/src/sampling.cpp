#include "flowerlab/sampling.hpp"

#include <cmath>
#include <stdexcept>

#include "flowerlab/errors.hpp"

namespace flowerlab {

namespace {

constexpr int kPrimes[64] = {
    2,   3,   5,   7,   11,  13,  17,  19,  23,  29,  31,  37,  41,
    43,  47,  53,  59,  61,  67,  71,  73,  79,  83,  89,  97,  101,
    103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167,
    173, 179, 181, 191, 193, 197, 199, 211, 223, 227, 229, 233, 239,
    241, 251, 257, 263, 269, 271, 277, 281, 283, 293, 307, 311};

double radical_inverse(std::uint64_t k, int base) {
    double inv = 1.0 / base, scale = inv, v = 0.0;
    while (k) {
        v += double(k % std::uint64_t(base)) * scale;
        k /= std::uint64_t(base);
        scale *= inv;
    }
    return v;
}

} // namespace

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Sampler::Sampler(std::uint64_t seed, std::size_t dims) : shift_(dims), out_(dims) {
    if (dims == 0 || dims > 64) throw PreconditionViolated("Sampler: dims must be in 1..64");
    std::uint64_t st = seed;
    for (double& sh : shift_) sh = double(splitmix64(st) >> 11) * 0x1p-53;
}

const std::vector<double>& Sampler::next() {
    ++index_;  // skip the all-zeros point
    for (std::size_t i = 0; i < shift_.size(); ++i) {
        double v = radical_inverse(index_, kPrimes[i]) + shift_[i];
        v -= std::floor(v);
        out_[i] = v < 1.0 ? v : 0.0;
    }
    return out_;
}

ComplexPoint sample_polydisc(double radius, double decades, Sampler& s) {
    const std::vector<double>& t = s.next();
    if (t.size() % 2 != 0) throw PreconditionViolated("sample_polydisc: need 2n dims");
    const std::size_t n = t.size() / 2;
    ComplexPoint x(n);
    const double lr = std::log(radius), span = -decades * std::log(10.0);
    for (std::size_t i = 0; i < n; ++i) {
        double rho = std::exp(lr + span * t[2 * i]);
        double phi = (2.0 * t[2 * i + 1] - 1.0) * M_PI;
        x[i] = std::polar(rho, phi);
    }
    return x;
}

} // namespace flowerlab
