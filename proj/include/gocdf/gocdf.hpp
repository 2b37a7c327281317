#pragma once

#include "gocdf/error.hpp"
#include "gocdf/linalg.hpp"
#include "gocdf/tensor.hpp"
#include "gocdf/manifold.hpp"
#include "gocdf/problem.hpp"
#include "gocdf/penalty.hpp"
#include "gocdf/problems.hpp"
#include "gocdf/timing.hpp"
#include "gocdf/solvers.hpp"
#include "gocdf/config.hpp"
#include "gocdf/harness.hpp"
#include "gocdf/selftest.hpp"
