#pragma once

#include "sqz/apparatus.hpp"
#include "sqz/csv.hpp"
#include "sqz/gaussian.hpp"
#include "sqz/linalg.hpp"
#include "sqz/netlist.hpp"
#include "sqz/oracle.hpp"
#include "sqz/rng.hpp"
#include "sqz/run.hpp"
#include "sqz/spectra.hpp"
#include "sqz/stokes.hpp"
