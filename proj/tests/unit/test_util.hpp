#pragma once

#include <chrono>
#include <random>

#include "doctest.h"
#include "sealflow/error.hpp"

#define CHECK_ERRC(expr, errc)                                           \
  do {                                                                   \
    bool sealflow_thrown = false;                                        \
    try {                                                                \
      (void)(expr);                                                      \
    } catch (const ::sealflow::Error& e) {                               \
      sealflow_thrown = true;                                            \
      CHECK_MESSAGE(e.code() == (errc), "got " << e.what());             \
    }                                                                    \
    CHECK_MESSAGE(sealflow_thrown, "expected " #errc " from " #expr);    \
  } while (false)

namespace testutil {

inline sealflow::Bytes random_bytes(std::mt19937_64& rng, std::size_t n) {
  sealflow::Bytes out(n);
  for (auto& b : out) b = static_cast<std::uint8_t>(rng());
  return out;
}

}  // namespace testutil
