#pragma once

#include "trcalc/integer.hpp"
#include "trcalc/errors.hpp"
#include "trcalc/padic.hpp"
#include "trcalc/drw.hpp"
#include "trcalc/syntomic.hpp"
#include "trcalc/matrix.hpp"
#include "trcalc/snf.hpp"
#include "trcalc/oracle.hpp"
#include "trcalc/prosystem.hpp"
#include "trcalc/parallel.hpp"
#include "trcalc/cli.hpp"
