#pragma once

#include "sbss/campaign.hpp"
#include "sbss/common.hpp"
#include "sbss/compositional.hpp"
#include "sbss/csv.hpp"
#include "sbss/diag.hpp"
#include "sbss/estimators.hpp"
#include "sbss/kernels.hpp"
#include "sbss/mdi.hpp"
#include "sbss/random.hpp"
#include "sbss/scatter.hpp"
#include "sbss/simulation.hpp"
