#pragma once

#include <cstdint>
#include <vector>

#include "flowerlab/point.hpp"

namespace flowerlab {

// Low-discrepancy point stream: Halton radical inverses with a seed-derived
// toral shift, so repeated runs with the same seed are bit-reproducible and
// different seeds give decorrelated nets.
class Sampler {
  public:
    Sampler(std::uint64_t seed, std::size_t dims);

    // Next point of the net, dims entries in [0, 1).
    const std::vector<double>& next();

    std::size_t dims() const { return shift_.size(); }

  private:
    std::vector<double> shift_;
    std::vector<double> out_;
    std::uint64_t index_ = 0;
};

// Bit mixer used to derive per-dimension shifts and sub-stream seeds.
std::uint64_t splitmix64(std::uint64_t& state);

// Point with log-uniform moduli in [radius*10^-decades, radius) and uniform
// arguments; consumes one Sampler point of dimension 2n.
ComplexPoint sample_polydisc(double radius, double decades, Sampler& s);

} // namespace flowerlab
