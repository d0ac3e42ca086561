#pragma once

// Umbrella header for the whole library.

#include "rarering/special_functions.hpp"
#include "rarering/gaussian_geometry.hpp"
#include "rarering/points.hpp"
#include "rarering/rng.hpp"
#include "rarering/direction_sampling.hpp"
#include "rarering/exploration_plan.hpp"
#include "rarering/classifier.hpp"
#include "rarering/candidate_engine.hpp"
#include "rarering/estimator.hpp"
#include "rarering/sensitivity.hpp"
#include "rarering/input_transform.hpp"
#include "rarering/benchmarks.hpp"
#include "rarering/driver.hpp"
#include "rarering/reporting.hpp"
