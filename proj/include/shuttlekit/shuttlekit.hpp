#pragma once

#include "shuttlekit/constants.hpp"
#include "shuttlekit/errors.hpp"
#include "shuttlekit/excitation.hpp"
#include "shuttlekit/noise.hpp"
#include "shuttlekit/numerics.hpp"
#include "shuttlekit/oracle.hpp"
#include "shuttlekit/parallel.hpp"
#include "shuttlekit/robustness.hpp"
#include "shuttlekit/trajectory.hpp"
