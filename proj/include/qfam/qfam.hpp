#pragma once

#include "qfam/big_scalar.hpp"
#include "qfam/chop.hpp"
#include "qfam/config.hpp"
#include "qfam/controller.hpp"
#include "qfam/error.hpp"
#include "qfam/interval.hpp"
#include "qfam/orbit.hpp"
#include "qfam/partition.hpp"
#include "qfam/point_orbit.hpp"
#include "qfam/rates.hpp"
