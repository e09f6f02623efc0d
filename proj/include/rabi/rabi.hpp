#pragma once

#include "rabi/model.hpp"
#include "rabi/numeric.hpp"
#include "rabi/system.hpp"
#include "rabi/series.hpp"
#include "rabi/gfunctions.hpp"
#include "rabi/oracle.hpp"
#include "rabi/spectrum.hpp"
#include "rabi/ode.hpp"
#include "rabi/io.hpp"
#include "rabi/cli.hpp"
