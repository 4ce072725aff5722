#pragma once

#include "grem/builtins.hpp"
#include "grem/cascade.hpp"
#include "grem/chain.hpp"
#include "grem/errors.hpp"
#include "grem/field.hpp"
#include "grem/gibbs.hpp"
#include "grem/model.hpp"
#include "grem/numeric.hpp"
#include "grem/parallel.hpp"
#include "grem/rng.hpp"
#include "grem/stats.hpp"
#include "grem/subset.hpp"
