#pragma once

#include "bge/checkpoint.hpp"
#include "bge/errors.hpp"
#include "bge/eval.hpp"
#include "bge/graph_data.hpp"
#include "bge/optimizer.hpp"
#include "bge/rng.hpp"
#include "bge/scores.hpp"
#include "bge/similarity.hpp"
#include "bge/synthetic.hpp"
