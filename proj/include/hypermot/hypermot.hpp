#pragma once

#include "hypermot/association.hpp"
#include "hypermot/bbox.hpp"
#include "hypermot/data_io.hpp"
#include "hypermot/estimator.hpp"
#include "hypermot/hypergraph.hpp"
#include "hypermot/kalman.hpp"
#include "hypermot/metrics.hpp"
#include "hypermot/motion_features.hpp"
#include "hypermot/param.hpp"
#include "hypermot/rng.hpp"
#include "hypermot/tracker.hpp"
#include "hypermot/training.hpp"
