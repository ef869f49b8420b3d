// This file is part of rmdp-lab, a toolkit for tabular robust Markov
// decision processes. Distributed under the MIT license; see LICENSE.
#pragma once

/// Umbrella header: pulls in the whole library.

#include "rmdp_lab/cnf.hpp"
#include "rmdp_lab/constants.hpp"
#include "rmdp_lab/csv.hpp"
#include "rmdp_lab/dominance.hpp"
#include "rmdp_lab/evaluate.hpp"
#include "rmdp_lab/instances.hpp"
#include "rmdp_lab/json_io.hpp"
#include "rmdp_lab/manifest.hpp"
#include "rmdp_lab/model.hpp"
#include "rmdp_lab/parallel.hpp"
#include "rmdp_lab/projection.hpp"
#include "rmdp_lab/prox.hpp"
#include "rmdp_lab/psd.hpp"
#include "rmdp_lab/reductions.hpp"
#include "rmdp_lab/rng.hpp"
#include "rmdp_lab/simplex_lp.hpp"
#include "rmdp_lab/stationarity.hpp"
#include "rmdp_lab/subgrad.hpp"
#include "rmdp_lab/types.hpp"
