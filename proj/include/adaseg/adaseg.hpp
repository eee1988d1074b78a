#pragma once

#include "adaseg/error.hpp"
#include "adaseg/filters.hpp"
#include "adaseg/format.hpp"
#include "adaseg/grid.hpp"
#include "adaseg/harness.hpp"
#include "adaseg/image_io.hpp"
#include "adaseg/lambda_map.hpp"
#include "adaseg/metrics.hpp"
#include "adaseg/solver.hpp"
#include "adaseg/synth.hpp"
