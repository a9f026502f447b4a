#pragma once

#include "error.hpp"
#include "specfun.hpp"
#include "levy_model.hpp"
#include "discount.hpp"
#include "ode.hpp"
#include "scale.hpp"
#include "h_ode.hpp"
#include "pricer.hpp"
#include "mc.hpp"
#include "bermudan.hpp"
#include "config.hpp"
