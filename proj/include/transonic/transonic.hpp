#pragma once

#include "transonic/error.hpp"
#include "transonic/gas.hpp"
#include "transonic/jump.hpp"
#include "transonic/grid.hpp"
#include "transonic/linalg.hpp"
#include "transonic/subsonic_solver.hpp"
#include "transonic/free_boundary.hpp"
#include "transonic/comparison.hpp"
#include "transonic/config.hpp"
#include "transonic/io.hpp"
