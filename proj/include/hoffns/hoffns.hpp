#pragma once

#include "hoffns/errors.hpp"
#include "hoffns/scalar_laws.hpp"
#include "hoffns/spectral.hpp"
#include "hoffns/tensor4.hpp"
#include "hoffns/initial_data.hpp"
#include "hoffns/solver.hpp"
#include "hoffns/diagnostics.hpp"
#include "hoffns/config.hpp"
#include "hoffns/commands.hpp"
#include "hoffns/verify.hpp"
