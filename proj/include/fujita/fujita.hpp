#pragma once

#include "fujita/error.hpp"
#include "fujita/exponents.hpp"
#include "fujita/profile.hpp"
#include "fujita/tridiagonal.hpp"
#include "fujita/ode.hpp"
#include "fujita/steady_states.hpp"
#include "fujita/self_similar.hpp"
#include "fujita/families.hpp"
#include "fujita/evolution.hpp"
#include "fujita/threshold.hpp"
#include "fujita/serialize.hpp"
#include "fujita/experiments.hpp"
