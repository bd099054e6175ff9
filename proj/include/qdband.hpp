#pragma once

#include "qdband/bands.hpp"
#include "qdband/distributions.hpp"
#include "qdband/estimator.hpp"
#include "qdband/kernels.hpp"
#include "qdband/mc.hpp"
#include "qdband/normal.hpp"
#include "qdband/parallel.hpp"
#include "qdband/rng.hpp"
