#pragma once
#include <doctest.h>

// Purely relative comparison; doctest's default absolute scale of 1 hides errors in small numbers.
inline doctest::Approx approx(double value) { return doctest::Approx(value).scale(0.0); }
