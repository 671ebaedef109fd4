#pragma once

// Umbrella header: the whole solver toolkit.
//
// Core pieces:
//   layout.hpp          outer decision vector: bounded scalars + gain blocks
//   affine.hpp          affine block-diagonal constraint slices and builder
//   evp.hpp             minimal-constraint-level solver (interior point)
//   problem.hpp         design problems and the augmented vector objective
//   pole_placement.hpp  trust-region gain recovery from pole targets
//   control.hpp         closed loops, stability margin, H2 / peak-gain norms
//   immune.hpp          population search over the augmented objective
//   catalog.hpp         ready-made design problems
//   io.hpp              JSON / CSV serialization
//   bench.hpp           batch runner and plotting

#include "bmiopt/affine.hpp"
#include "bmiopt/bench.hpp"
#include "bmiopt/catalog.hpp"
#include "bmiopt/control.hpp"
#include "bmiopt/dominance.hpp"
#include "bmiopt/errors.hpp"
#include "bmiopt/evp.hpp"
#include "bmiopt/immune.hpp"
#include "bmiopt/io.hpp"
#include "bmiopt/layout.hpp"
#include "bmiopt/pole_placement.hpp"
#include "bmiopt/problem.hpp"
#include "bmiopt/random.hpp"
