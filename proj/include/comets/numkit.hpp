#pragma once

#include "comets/distributions.hpp"
#include "comets/error.hpp"
#include "comets/linalg.hpp"
#include "comets/matrix.hpp"
#include "comets/parallel.hpp"
#include "comets/rng.hpp"
