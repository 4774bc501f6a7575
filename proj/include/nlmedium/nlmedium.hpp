#pragma once

#include "core.hpp"
#include "displacement.hpp"
#include "duffing.hpp"
#include "fieldspace.hpp"
#include "medium.hpp"
#include "nonlinear.hpp"
#include "parallel.hpp"
#include "wick.hpp"
