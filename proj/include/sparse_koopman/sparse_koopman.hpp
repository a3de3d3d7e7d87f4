#pragma once

#include "config.hpp"
#include "core.hpp"
#include "csv.hpp"
#include "dictionary.hpp"
#include "dynamics.hpp"
#include "enrichment.hpp"
#include "experiments.hpp"
#include "linalg.hpp"
#include "model_io.hpp"
#include "predictor.hpp"
#include "random.hpp"
#include "solver.hpp"
#include "spectrum.hpp"
