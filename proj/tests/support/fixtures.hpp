#pragma once

#include <gtest/gtest.h>

#include "tractflow/error.hpp"
#include "geometry.hpp"


/// Asserts that `stmt` throws tractflow::Error carrying `code`.
#define EXPECT_ERRC(stmt, expected_errc)                                              \
  do {                                                                                \
    try {                                                                             \
      stmt;                                                                           \
      ADD_FAILURE() << "expected " << ::tractflow::to_string(expected_errc) << ", nothing thrown"; \
    } catch (const ::tractflow::Error& e_) {                                          \
      EXPECT_EQ(e_.code(), expected_errc) << e_.what();                               \
    }                                                                                 \
  } while (0)
