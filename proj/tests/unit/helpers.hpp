#pragma once

#include <functional>

#include <doctest.h>

#include "fermi/types.hpp"

// the error code thrown by f, or nullopt-like sentinel -1 if nothing was thrown
inline int thrown_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const fermi::Error& e) {
    return static_cast<int>(e.code());
  }
  return -1;
}

#define CHECK_ERRC(expr, code) CHECK(thrown_code([&] { (void)(expr); }) == static_cast<int>(code))
