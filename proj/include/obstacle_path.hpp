#pragma once

// Umbrella header.

#include "obstacle_path/analytic.hpp"
#include "obstacle_path/config.hpp"
#include "obstacle_path/curve.hpp"
#include "obstacle_path/curve_io.hpp"
#include "obstacle_path/error.hpp"
#include "obstacle_path/log.hpp"
#include "obstacle_path/obstacle.hpp"
#include "obstacle_path/optimizer.hpp"
#include "obstacle_path/report_io.hpp"
#include "obstacle_path/structure.hpp"
#include "obstacle_path/uniqueness.hpp"
