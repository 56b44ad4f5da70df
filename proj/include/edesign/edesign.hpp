#pragma once

#include "edesign/core/betting.hpp"
#include "edesign/core/design.hpp"
#include "edesign/core/errors.hpp"
#include "edesign/grid/grid.hpp"
#include "edesign/oc/binomial.hpp"
#include "edesign/oc/forward.hpp"
#include "edesign/oc/oracle.hpp"
#include "edesign/oc/profile.hpp"
#include "edesign/oc/simulate.hpp"
#include "edesign/solver/backward.hpp"
#include "edesign/solver/constrained.hpp"
#include "edesign/solver/policy.hpp"
#include "edesign/solver/rewards.hpp"
#include "edesign/solver/strategy.hpp"
