#pragma once

// Umbrella header.

#include "ratchet/closed_form.hpp"
#include "ratchet/dp_oracle.hpp"
#include "ratchet/empirics.hpp"
#include "ratchet/errors.hpp"
#include "ratchet/model.hpp"
#include "ratchet/nonlinear.hpp"
#include "ratchet/policy.hpp"
#include "ratchet/sim.hpp"
#include "ratchet/verify.hpp"
