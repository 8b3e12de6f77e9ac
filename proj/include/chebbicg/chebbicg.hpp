#pragma once

// chebbicg: Chebyshev interpolation + companion linearization + multishift
// shift-and-invert Krylov solvers for parameterized linear systems
// A(mu) x(mu) = b over mu in [-a, a].

#include "chebbicg/banded.hpp"
#include "chebbicg/blas.hpp"
#include "chebbicg/chebyshev.hpp"
#include "chebbicg/companion.hpp"
#include "chebbicg/dense.hpp"
#include "chebbicg/errors.hpp"
#include "chebbicg/inner.hpp"
#include "chebbicg/matrix_market.hpp"
#include "chebbicg/precond.hpp"
#include "chebbicg/problems.hpp"
#include "chebbicg/report.hpp"
#include "chebbicg/solver_exact.hpp"
#include "chebbicg/solver_inexact.hpp"
#include "chebbicg/sparse.hpp"
#include "chebbicg/verify.hpp"
