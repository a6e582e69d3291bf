#pragma once

#include <cktfed/error.hpp>

#include <doctest.h>

// Asserts that `expr` throws cktfed::Error carrying `code`.
#define CHECK_ERROR_CODE(expr, expected)                                   \
    do {                                                                   \
        bool thrown_ = false;                                              \
        try {                                                              \
            (void)(expr);                                                  \
        } catch (const cktfed::Error& e_) {                                \
            thrown_ = true;                                                \
            CHECK_MESSAGE(e_.code() == (expected), "got " << cktfed::to_string(e_.code())); \
        }                                                                  \
        CHECK_MESSAGE(thrown_, "no cktfed::Error thrown by " #expr);       \
    } while (0)
