#pragma once

#include "fuseloc/calibration.hpp"
#include "fuseloc/ekf.hpp"
#include "fuseloc/errors.hpp"
#include "fuseloc/geometry.hpp"
#include "fuseloc/metrics.hpp"
#include "fuseloc/monte_carlo.hpp"
#include "fuseloc/motion.hpp"
#include "fuseloc/random.hpp"
#include "fuseloc/scanmatch.hpp"
#include "fuseloc/scenario.hpp"
#include "fuseloc/sensors.hpp"
#include "fuseloc/trajectory.hpp"
