#include "etz/rng.hpp"

#include <boost/random/normal_distribution.hpp>

namespace etz::rng {

double standard_normal(SplitMix64& gen) {
    boost::random::normal_distribution<double> dist(0.0, 1.0);
    return dist(gen);
}

}  // namespace etz::rng
