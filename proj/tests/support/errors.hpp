#pragma once

#include <gtest/gtest.h>

#include "procmine/error.hpp"

// Fails unless `stmt` throws procmine::Error carrying `expected`.
#define EXPECT_ERROR_CODE(stmt, expected)                                                   \
  do {                                                                                      \
    try {                                                                                   \
      stmt;                                                                                 \
      ADD_FAILURE() << "expected " << procmine::to_string(expected) << ", nothing thrown";  \
    } catch (const procmine::Error& e) {                                                    \
      EXPECT_EQ(e.code(), expected) << e.what();                                            \
    }                                                                                       \
  } while (0)
