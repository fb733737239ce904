#pragma once

#include "hizoo/config.hpp"
#include "hizoo/core.hpp"
#include "hizoo/estimators.hpp"
#include "hizoo/format.hpp"
#include "hizoo/harness.hpp"
#include "hizoo/objectives.hpp"
#include "hizoo/optimizers.hpp"
#include "hizoo/oracle.hpp"
#include "hizoo/perturb.hpp"
#include "hizoo/svg.hpp"
#include "hizoo/verify.hpp"
