#pragma once

#include <limits>

#include "doctest.h"

// relative comparison; doctest's default scale of 1 makes small values compare absolutely
inline doctest::Approx approx(double v) { return doctest::Approx(v).scale(std::numeric_limits<double>::min()); }
