#pragma once

#include "mott/core.hpp"
#include "mott/quadrature.hpp"
#include "mott/model.hpp"
#include "mott/phase.hpp"
#include "mott/qmc.hpp"
#include "mott/oscillatory.hpp"
#include "mott/reduced.hpp"
#include "mott/probability.hpp"
#include "mott/harness/config.hpp"
#include "mott/harness/records.hpp"
#include "mott/harness/verification.hpp"
#include "mott/harness/commands.hpp"
