#pragma once
#include <functional>

#include <gtest/gtest.h>

#include "fklab/error.hpp"

inline void expect_error(fklab::ErrorKind kind, const std::function<void()>& f) {
  try {
    f();
    ADD_FAILURE() << "expected " << fklab::to_string(kind) << ", nothing thrown";
  } catch (const fklab::Error& e) {
    EXPECT_EQ(e.kind(), kind) << "got " << fklab::to_string(e.kind()) << ": " << e.what();
  }
}
