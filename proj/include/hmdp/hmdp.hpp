#pragma once

#include "hmdp/errors.hpp"
#include "hmdp/quadrature.hpp"
#include "hmdp/geometry.hpp"
#include "hmdp/snapshot.hpp"
#include "hmdp/boundary.hpp"
#include "hmdp/specialfn.hpp"
#include "hmdp/extension.hpp"
#include "hmdp/solver.hpp"
#include "hmdp/checks.hpp"
#include "hmdp/config.hpp"
#include "hmdp/experiment.hpp"
