#pragma once

#include "lpllp/core.hpp"
#include "lpllp/datagen.hpp"
#include "lpllp/experiment.hpp"
#include "lpllp/graph.hpp"
#include "lpllp/projections.hpp"
#include "lpllp/propagation.hpp"
