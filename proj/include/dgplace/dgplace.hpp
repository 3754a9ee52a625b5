#pragma once

#include "dgplace/errors.hpp"
#include "dgplace/network.hpp"
#include "dgplace/feeder_io.hpp"
#include "dgplace/powerflow.hpp"
#include "dgplace/indices.hpp"
#include "dgplace/evaluator.hpp"
#include "dgplace/ga.hpp"
#include "dgplace/oracle.hpp"
