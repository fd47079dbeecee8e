#pragma once

#include "cdk/crypto.hpp"

#include <random>

namespace cdk::test {

inline crypto::Seed random_seed(std::mt19937_64 &rng)
{
    crypto::Seed seed{};
    for (auto &b : seed) {
        b = static_cast<std::uint8_t>(rng());
    }
    return seed;
}

inline crypto::KeyPair random_keypair(std::mt19937_64 &rng)
{
    return crypto::derive_keypair(random_seed(rng));
}

inline Bytes random_message(std::mt19937_64 &rng, std::size_t max_len = 96)
{
    Bytes msg(1 + rng() % max_len);
    for (auto &b : msg) {
        b = static_cast<std::uint8_t>(rng());
    }
    return msg;
}

}  // namespace cdk::test
