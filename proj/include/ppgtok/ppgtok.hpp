#pragma once

// Umbrella header for the whole toolkit.

#include "ppgtok/common.hpp"
#include "ppgtok/gaussian.hpp"
#include "ppgtok/io.hpp"
#include "ppgtok/kmeans.hpp"
#include "ppgtok/metrics.hpp"
#include "ppgtok/parallel.hpp"
#include "ppgtok/rng.hpp"
#include "ppgtok/synth.hpp"
#include "ppgtok/types.hpp"
#include "ppgtok/vq.hpp"
