// cpstein.hpp
#pragma once

#include "cpstein/applications.hpp"
#include "cpstein/cp_core.hpp"
#include "cpstein/error.hpp"
#include "cpstein/exact_oracles.hpp"
#include "cpstein/serialize.hpp"
#include "cpstein/stein_bounds.hpp"
#include "cpstein/stein_oracle.hpp"
