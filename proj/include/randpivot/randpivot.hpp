#pragma once

// Randomized-pivot matrix factorization: one engine producing EVD, SVD,
// Cholesky, QR, LDL, QL, and plain orthogonalization from structural
// constraints on the per-pivot transform.

#include "driver.hpp"
#include "generators.hpp"
#include "io.hpp"
#include "lab.hpp"
#include "linalg.hpp"
#include "local_transform.hpp"
#include "matrix.hpp"
#include "metrics.hpp"
#include "pivoting.hpp"
