#pragma once

// Pseudoinverses of low-rank-perturbed matrices: closed-form updates of
// (a - x y*)+ from a+, the hypothesis checks that license them, and an
// SVD-based reference implementation everything is verified against.

#include "woodbury/decomp.hpp"
#include "woodbury/errors.hpp"
#include "woodbury/generate.hpp"
#include "woodbury/io.hpp"
#include "woodbury/matrix.hpp"
#include "woodbury/projectors.hpp"
#include "woodbury/random.hpp"
#include "woodbury/tolerance.hpp"
#include "woodbury/update.hpp"
