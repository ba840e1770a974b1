#pragma once

#include "core.hpp"
#include "detequiv.hpp"
#include "io.hpp"
#include "limitlaw.hpp"
#include "linalg.hpp"
#include "models.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"
#include "rigidity.hpp"
#include "rng.hpp"
#include "spectra.hpp"
#include "transfer.hpp"
