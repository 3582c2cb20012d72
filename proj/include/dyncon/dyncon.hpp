#pragma once

#include "dyncon/concentration.hpp"
#include "dyncon/graph.hpp"
#include "dyncon/node_dynamics.hpp"
#include "dyncon/parallel.hpp"
#include "dyncon/quadrature.hpp"
#include "dyncon/rational_tf.hpp"
#include "dyncon/rng.hpp"
#include "dyncon/time_sim.hpp"
#include "dyncon/transfer_matrix.hpp"
#include "dyncon/types.hpp"

#include "dyncon/io/config.hpp"
#include "dyncon/io/csv.hpp"
#include "dyncon/io/grid_table.hpp"
#include "dyncon/io/run.hpp"
