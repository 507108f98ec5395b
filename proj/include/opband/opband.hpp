#pragma once

#include "error.hpp"
#include "random.hpp"
#include "parallel.hpp"
#include "pointset.hpp"
#include "weights.hpp"
#include "blockmat.hpp"
#include "norms.hpp"
#include "spectral.hpp"
#include "bgs_fourier.hpp"
#include "generate.hpp"
#include "json_io.hpp"
#include "verify.hpp"
