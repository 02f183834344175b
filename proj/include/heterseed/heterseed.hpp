#pragma once

#include "heterseed/error.hpp"
#include "heterseed/graph.hpp"
#include "heterseed/graph_io.hpp"
#include "heterseed/homophily.hpp"
#include "heterseed/metapath.hpp"
#include "heterseed/model/forward.hpp"
#include "heterseed/nn/adam.hpp"
#include "heterseed/nn/checkpoint.hpp"
#include "heterseed/rng.hpp"
#include "heterseed/structure.hpp"
#include "heterseed/synth/bias.hpp"
#include "heterseed/synth/sbm.hpp"
#include "heterseed/synth/theorem1.hpp"
#include "heterseed/train/config.hpp"
#include "heterseed/train/metrics.hpp"
#include "heterseed/train/sampler.hpp"
#include "heterseed/train/trainer.hpp"
