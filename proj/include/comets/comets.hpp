#pragma once

#include "comets/data.hpp"
#include "comets/engines.hpp"
#include "comets/gcm.hpp"
#include "comets/multiplicity.hpp"
#include "comets/numkit.hpp"
#include "comets/pcm.hpp"
#include "comets/regression.hpp"
#include "comets/report.hpp"
#include "comets/simharness.hpp"
