#pragma once

// Exact steady-state analysis of M/E_r/c/K queueing systems.

#include "erq/generator.hpp"
#include "erq/measures.hpp"
#include "erq/params.hpp"
#include "erq/record.hpp"
#include "erq/sim.hpp"
#include "erq/solver.hpp"
#include "erq/state_space.hpp"
#include "erq/tables.hpp"
