#pragma once

#include "vqm/anova.hpp"
#include "vqm/error.hpp"
#include "vqm/fitting.hpp"
#include "vqm/models.hpp"
#include "vqm/planner.hpp"
#include "vqm/ratings.hpp"
#include "vqm/special.hpp"
#include "vqm/stats.hpp"
#include "vqm/types.hpp"
